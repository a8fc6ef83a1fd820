//! Instance constructors: named example sequences and parameterized
//! random and adversarial families.
//!
//! Randomness comes from ChaCha12 (rand_chacha), seeded explicitly, and
//! every variate is a dyadic rational k/2^b taken from the bit stream,
//! so identical seeds reproduce identical instances on any platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

use crate::engine::simulate;
use crate::model::{validate_instance, Instance, ModelError};
use crate::oracle;
use crate::policies::{policy_for, PolicyId};
use crate::ratio::{rat, Ratio};

#[derive(Debug, Clone)]
pub enum GeneratorSpec {
    /// g = (0, 2, 4) with unit sizes and T = 5; FCFS realizes the
    /// completion times r = (1, 3, 5).
    Example1,
    /// Burst of m half-size updates inside (0, epsilon] plus unit-size
    /// updates at every integer below the horizon.
    Example2 {
        m: u64,
        epsilon: Ratio,
        horizon: Ratio,
    },
    /// The six-update sequence with T = 2.
    Example3,
    RandomUniform {
        n: usize,
        g_max: Ratio,
        s_max: Ratio,
        seed: u64,
    },
    RandomPoissonLike {
        n: usize,
        rate: Ratio,
        mean_size: Ratio,
        seed: u64,
    },
    Perturb {
        base: Instance,
        magnitude: Ratio,
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid generator parameters: {0}")]
    InvalidSpecParams(String),
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub fn example1() -> Instance {
    validate_instance(
        vec![
            (rat("0"), rat("1")),
            (rat("2"), rat("1")),
            (rat("4"), rat("1")),
        ],
        rat("5"),
        rat("0"),
    )
    .unwrap()
}

pub fn example3() -> Instance {
    validate_instance(
        vec![
            (rat("0"), rat("29/20")),
            (rat("1/4"), rat("5/4")),
            (rat("3/4"), rat("1")),
            (rat("1"), rat("1/2")),
            (rat("5/4"), rat("3/10")),
            (rat("9/5"), rat("1/10")),
        ],
        rat("2"),
        rat("0"),
    )
    .unwrap()
}

/// Uniform dyadic in [0, 1): k / 2^32.
fn unit_uniform(rng: &mut ChaCha12Rng) -> Ratio {
    Ratio::dyadic(rng.next_u32() as u64, 32)
}

/// Uniform dyadic in (0, 1]: (k + 1) / 2^32.
fn unit_uniform_positive(rng: &mut ChaCha12Rng) -> Ratio {
    Ratio::dyadic(rng.next_u32() as u64 + 1, 32)
}

/// Exponential variate with unit mean, snapped to the 1/2^20 dyadic
/// grid (never zero). The quantile is evaluated in floating point but
/// the emitted variate is an exact dyadic rational.
fn unit_exponential(rng: &mut ChaCha12Rng) -> Ratio {
    let u = (rng.next_u32() as u64 + 1) as f64 / (1u64 << 32) as f64;
    let e = -u.ln();
    let k = ((e * (1u64 << 20) as f64).ceil() as u64).max(1);
    Ratio::dyadic(k, 20)
}

pub fn generate(spec: &GeneratorSpec) -> Result<Instance, GeneratorError> {
    match spec {
        GeneratorSpec::Example1 => Ok(example1()),
        GeneratorSpec::Example2 { m, epsilon, horizon } => {
            if *m < 1 {
                return Err(GeneratorError::InvalidSpecParams("m must be >= 1".into()));
            }
            if !epsilon.is_positive() || !horizon.is_positive() {
                return Err(GeneratorError::InvalidSpecParams(
                    "epsilon and horizon must be positive".into(),
                ));
            }
            let half = rat("1/2");
            let one = Ratio::one();
            let mut raw = Vec::new();
            for i in 0..*m {
                // generation = epsilon / (m - i)
                let denom = Ratio::from_int((*m - i) as i64);
                raw.push((epsilon / &denom, half.clone()));
            }
            let mut k = 1i64;
            while Ratio::from_int(k) < *horizon {
                raw.push((Ratio::from_int(k), one.clone()));
                k += 1;
            }
            Ok(validate_instance(raw, horizon.clone(), Ratio::zero())?)
        }
        GeneratorSpec::Example3 => Ok(example3()),
        GeneratorSpec::RandomUniform { n, g_max, s_max, seed } => {
            if !g_max.is_positive() || !s_max.is_positive() {
                return Err(GeneratorError::InvalidSpecParams(
                    "g_max and s_max must be positive".into(),
                ));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            let raw: Vec<(Ratio, Ratio)> = (0..*n)
                .map(|_| {
                    let g = &unit_uniform(&mut rng) * g_max;
                    let s = &unit_uniform_positive(&mut rng) * s_max;
                    (g, s)
                })
                .collect();
            let horizon = g_max + &(s_max * &rat("2"));
            Ok(validate_instance(raw, horizon, Ratio::zero())?)
        }
        GeneratorSpec::RandomPoissonLike { n, rate, mean_size, seed } => {
            if !rate.is_positive() || !mean_size.is_positive() {
                return Err(GeneratorError::InvalidSpecParams(
                    "rate and mean_size must be positive".into(),
                ));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            let mut g = Ratio::zero();
            let mut raw = Vec::new();
            for _ in 0..*n {
                g += &(&unit_exponential(&mut rng) / rate);
                let s = &unit_exponential(&mut rng) * mean_size;
                raw.push((g.clone(), s));
            }
            let horizon = &g + &(mean_size * &rat("2"));
            Ok(validate_instance(raw, horizon, Ratio::zero())?)
        }
        GeneratorSpec::Perturb { base, magnitude, seed } => {
            if magnitude.is_negative() {
                return Err(GeneratorError::InvalidSpecParams(
                    "magnitude must be nonnegative".into(),
                ));
            }
            let mut rng = ChaCha12Rng::seed_from_u64(*seed);
            let horizon = base.horizon().clone();
            let raw: Vec<(Ratio, Ratio)> = base
                .updates()
                .iter()
                .map(|u| {
                    let bits = rng.next_u32();
                    let delta = &Ratio::dyadic((rng.next_u32() >> 16) as u64, 16) * magnitude;
                    let delta = if bits & 2 == 0 { delta } else { -delta };
                    if bits & 1 == 0 {
                        let g = &u.generation + &delta;
                        if !g.is_negative() && g < horizon {
                            (g, u.size.clone())
                        } else {
                            (u.generation.clone(), u.size.clone())
                        }
                    } else {
                        let s = &u.size + &delta;
                        if s.is_positive() {
                            (u.generation.clone(), s)
                        } else {
                            (u.generation.clone(), u.size.clone())
                        }
                    }
                })
                .collect();
            Ok(validate_instance(
                raw,
                horizon,
                base.initial_generation().clone(),
            )?)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub best_instance: Instance,
    /// Exact AoI-integral ratio of the policy against the chain oracle
    /// on `best_instance`; this is the maximum over all evaluated
    /// candidates by construction.
    pub best_ratio: Ratio,
    pub evaluations: u64,
}

fn policy_over_oracle(instance: &Instance, policy: PolicyId, cap: usize) -> Option<Ratio> {
    let opt = oracle::optimal(instance, cap).ok()?;
    if !opt.best_report.integral.is_positive() {
        return None;
    }
    let trace = simulate(instance, policy_for(policy).as_ref()).ok()?;
    let report = crate::aoi::average_aoi(&trace, instance).ok()?;
    Some(&report.integral / &opt.best_report.integral)
}

/// Randomized hill climb for high-ratio instances: perturb generations
/// and sizes, keep a candidate iff the exact policy/oracle ratio
/// improves.
pub fn adversarial_search(
    policy: PolicyId,
    n: usize,
    budget: u64,
    seed: u64,
    cap: usize,
) -> Result<SearchResult, GeneratorError> {
    if n > cap {
        return Err(GeneratorError::InvalidSpecParams(format!(
            "n = {n} exceeds oracle cap {cap}"
        )));
    }
    let mut best = generate(&GeneratorSpec::RandomUniform {
        n,
        g_max: rat("4"),
        s_max: rat("2"),
        seed,
    })?;
    let mut best_ratio =
        policy_over_oracle(&best, policy, cap).unwrap_or_else(Ratio::one);
    let magnitudes = [rat("1"), rat("1/4"), rat("1/32")];
    let mut evaluations = 1u64;
    for step in 0..budget {
        let candidate = generate(&GeneratorSpec::Perturb {
            base: best.clone(),
            magnitude: magnitudes[(step % 3) as usize].clone(),
            seed: seed ^ (step + 1),
        })?;
        if let Some(ratio) = policy_over_oracle(&candidate, policy, cap) {
            evaluations += 1;
            if ratio > best_ratio {
                best = candidate;
                best_ratio = ratio;
            }
        }
    }
    Ok(SearchResult {
        best_instance: best,
        best_ratio,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example2_small() {
        let inst = generate(&GeneratorSpec::Example2 {
            m: 2,
            epsilon: rat("1/10"),
            horizon: rat("3"),
        })
        .unwrap();
        let got: Vec<(Ratio, Ratio)> = inst
            .updates()
            .iter()
            .map(|u| (u.generation.clone(), u.size.clone()))
            .collect();
        assert_eq!(
            got,
            vec![
                (rat("1/20"), rat("1/2")),
                (rat("1/10"), rat("1/2")),
                (rat("1"), rat("1")),
                (rat("2"), rat("1")),
            ]
        );
    }

    #[test]
    fn example2_structure() {
        let m = 7u64;
        let inst = generate(&GeneratorSpec::Example2 {
            m,
            epsilon: rat("1/100"),
            horizon: rat("10"),
        })
        .unwrap();
        assert_eq!(inst.len() as u64, m + 9);
        let eps = rat("1/100");
        for u in inst.updates().iter().take(m as usize) {
            assert!(u.generation.is_positive() && u.generation <= eps);
        }
    }

    #[test]
    fn example3_matches_fixture() {
        let inst = generate(&GeneratorSpec::Example3).unwrap();
        assert_eq!(inst, example3());
    }

    #[test]
    fn random_uniform_empty() {
        let inst = generate(&GeneratorSpec::RandomUniform {
            n: 0,
            g_max: rat("4"),
            s_max: rat("2"),
            seed: 1,
        })
        .unwrap();
        assert!(inst.is_empty());
    }

    #[test]
    fn random_reproducible() {
        let spec = GeneratorSpec::RandomUniform {
            n: 8,
            g_max: rat("4"),
            s_max: rat("2"),
            seed: 42,
        };
        assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        let other = GeneratorSpec::RandomUniform {
            n: 8,
            g_max: rat("4"),
            s_max: rat("2"),
            seed: 43,
        };
        assert_ne!(generate(&spec).unwrap(), generate(&other).unwrap());
    }

    #[test]
    fn poisson_like_sorted_and_valid() {
        let inst = generate(&GeneratorSpec::RandomPoissonLike {
            n: 12,
            rate: rat("2"),
            mean_size: rat("1/2"),
            seed: 7,
        })
        .unwrap();
        assert_eq!(inst.len(), 12);
        for pair in inst.updates().windows(2) {
            assert!(pair[0].generation <= pair[1].generation);
        }
    }

    #[test]
    fn perturb_keeps_validity() {
        let inst = generate(&GeneratorSpec::Perturb {
            base: example3(),
            magnitude: rat("1/8"),
            seed: 3,
        })
        .unwrap();
        assert_eq!(inst.len(), 6);
        assert_eq!(inst.horizon(), &rat("2"));
    }

    #[test]
    fn search_with_zero_budget_returns_seed_instance() {
        let result = adversarial_search(PolicyId::Srpt, 4, 0, 5, 20).unwrap();
        assert!(result.best_ratio >= Ratio::one());
        assert_eq!(result.evaluations, 1);
    }
}
