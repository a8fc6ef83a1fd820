//! Brute-force offline-optimal schedule.
//!
//! The search space is the set of *chains*: increasing-index subsets of
//! updates transmitted non-preemptively in order, each as early as
//! possible. An offline optimum never gains from completing an update
//! older than one already delivered, abandoning partial work, or
//! preempting inside a committed chain; this reduction is not proven
//! here but is cross-checked against an exhaustive lattice search
//! ([`micro_validate`]).

use num_traits::ToPrimitive;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;

use crate::aoi::{average_aoi, AoiReport, AoiTrajectory};
use crate::model::{Instance, Segment, Trace};
use crate::ratio::Ratio;

/// Default cap on instance size for exhaustive enumeration.
pub const DEFAULT_CAP: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("instance has {n} updates, above the enumeration cap {cap}; raise --cap to override")]
    InstanceTooLarge { n: usize, cap: usize },
    #[error("lattice search state space exceeds {cap} states")]
    GridTooFine { cap: usize },
    #[error("instance data is not on the 1/{grid} lattice")]
    NotOnGrid { grid: u64 },
}

/// Increasing-index subset of updates, served in order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Chain(pub Vec<usize>);

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub best_chain: Chain,
    pub best_trace: Trace,
    pub best_report: AoiReport,
    pub chains_examined: u64,
}

/// Non-preemptive earliest-completion schedule of a chain.
///
/// c_1 = g_1 + s_1 and c_m = max(c_{m-1}, g_m) + s_m; chain elements
/// from the first completion past the horizon onward are dropped.
pub fn chain_schedule(chain: &Chain, instance: &Instance) -> Trace {
    let mut segments = Vec::new();
    let mut completions = Vec::new();
    let mut clock = Ratio::zero();
    for &idx in &chain.0 {
        let u = instance.update(idx);
        let start = if clock > u.generation {
            clock.clone()
        } else {
            u.generation.clone()
        };
        let end = &start + &u.size;
        if end > *instance.horizon() {
            break;
        }
        segments.push(Segment {
            update_index: idx,
            start,
            end: end.clone(),
        });
        completions.push((idx, end.clone()));
        clock = end;
    }
    Trace {
        instance_id: crate::io::instance_id(instance),
        segments,
        completions,
    }
}

// Integral of the chain's schedule without materializing a Trace.
fn chain_integral_by_mask(mask: u64, instance: &Instance) -> Ratio {
    let mut clock = Ratio::zero();
    let mut completions: Vec<(Ratio, Ratio)> = Vec::new();
    for i in 0..instance.len() {
        if mask & (1 << i) == 0 {
            continue;
        }
        let u = instance.update(i + 1);
        let start = if clock > u.generation {
            clock.clone()
        } else {
            u.generation.clone()
        };
        let end = &start + &u.size;
        if end > *instance.horizon() {
            break;
        }
        completions.push((end.clone(), u.generation.clone()));
        clock = end;
    }
    let traj = AoiTrajectory::from_completions(
        completions,
        instance.initial_generation().clone(),
        Ratio::zero(),
        instance.horizon().clone(),
    );
    crate::aoi::integrate(&traj, &Ratio::zero(), instance.horizon()).unwrap()
}

fn chain_from_mask(mask: u64, n: usize) -> Chain {
    Chain((0..n).filter(|i| mask & (1 << i) != 0).map(|i| i + 1).collect())
}

/// Exhaustive minimization of the exact AoI integral over all 2^n
/// chains. Ties resolve to the lexicographically smallest chain, so
/// parallel and sequential runs agree.
pub fn optimal(instance: &Instance, cap: usize) -> Result<OracleResult, OracleError> {
    let n = instance.len();
    if n > cap {
        return Err(OracleError::InstanceTooLarge { n, cap });
    }
    let total: u64 = 1 << n;
    let best = (0..total)
        .into_par_iter()
        .map(|mask| (chain_integral_by_mask(mask, instance), mask))
        .reduce_with(|a, b| {
            let ka = (&a.0, chain_from_mask(a.1, n));
            let kb = (&b.0, chain_from_mask(b.1, n));
            if kb < ka {
                b
            } else {
                a
            }
        })
        .unwrap_or((chain_integral_by_mask(0, instance), 0));
    let best_chain = chain_from_mask(best.1, n);
    let best_trace = chain_schedule(&best_chain, instance);
    let best_report = average_aoi(&best_trace, instance).expect("chain schedule is valid");
    debug_assert_eq!(best_report.integral, best.0);
    Ok(OracleResult {
        best_chain,
        best_trace,
        best_report,
        chains_examined: total,
    })
}

/// Policy-independent lower bound on the AoI integral over [0, T].
///
/// No policy can deliver an update j >= i before min_{j>=i}(g_j + s_j),
/// so the step function max{g_i : g_i + nu_i_min <= t} dominates every
/// achievable lambda(t) and its age integral bounds every schedule.
pub fn aoi_integral_lower_bound(instance: &Instance) -> Ratio {
    let nu_min = instance.nu_min();
    let completions: Vec<(Ratio, Ratio)> = instance
        .updates()
        .iter()
        .zip(&nu_min)
        .map(|(u, nm)| (&u.generation + nm, u.generation.clone()))
        .collect();
    let traj = AoiTrajectory::from_completions(
        completions,
        instance.initial_generation().clone(),
        Ratio::zero(),
        instance.horizon().clone(),
    );
    crate::aoi::integrate(&traj, &Ratio::zero(), instance.horizon()).unwrap()
}

const LATTICE_STATE_CAP: usize = 4_000_000;

/// Exhaustive search over all discrete-time preemptive schedules on the
/// 1/grid lattice; returns true iff no lattice schedule beats the chain
/// oracle's integral.
///
/// Serving an update whose generation is no newer than the current
/// lambda is dominated by idling (completing it cannot raise lambda),
/// so such updates are pruned from the action set and erased from the
/// state key; every other preemption/resumption pattern is explored.
pub fn micro_validate(instance: &Instance, grid: u64) -> Result<bool, OracleError> {
    let to_units = |r: &Ratio| -> Result<i64, OracleError> {
        let scaled = r * &Ratio::from_int(grid as i64);
        if !scaled.denominator().eq(&1.into()) {
            return Err(OracleError::NotOnGrid { grid });
        }
        scaled.numerator().to_i64().ok_or(OracleError::NotOnGrid { grid })
    };
    let n = instance.len();
    let horizon_u = to_units(instance.horizon())?;
    let lambda0_u = to_units(instance.initial_generation())?;
    let gen_u: Vec<i64> = instance
        .updates()
        .iter()
        .map(|u| to_units(&u.generation))
        .collect::<Result<_, _>>()?;
    let size_u: Vec<i64> = instance
        .updates()
        .iter()
        .map(|u| to_units(&u.size))
        .collect::<Result<_, _>>()?;

    // State: remaining units per update (0 for dead/done) + current
    // lambda in units. Value: minimal 2*grid^2*integral so far.
    type Key = (Vec<u16>, i64);
    let kill_stale = |rem: &mut Vec<u16>, lambda: i64| {
        for i in 0..n {
            if gen_u[i] <= lambda {
                rem[i] = 0;
            }
        }
    };
    let mut init_rem: Vec<u16> = size_u.iter().map(|&s| s as u16).collect();
    kill_stale(&mut init_rem, lambda0_u);
    let mut states: HashMap<Key, i64> = HashMap::new();
    states.insert((init_rem, lambda0_u), 0);

    for slot in 0..horizon_u {
        let mut next: HashMap<Key, i64> = HashMap::new();
        let mut push = |key: Key, acc: i64| {
            next.entry(key)
                .and_modify(|v| *v = (*v).min(acc))
                .or_insert(acc);
        };
        for ((rem, lambda), acc) in &states {
            let slot_area = 2 * (slot - lambda) + 1;
            let acc = acc + slot_area;
            // Idle.
            push((rem.clone(), *lambda), acc);
            for i in 0..n {
                if rem[i] == 0 || gen_u[i] > slot {
                    continue;
                }
                let mut r2 = rem.clone();
                r2[i] -= 1;
                let mut l2 = *lambda;
                if r2[i] == 0 {
                    l2 = l2.max(gen_u[i]);
                    kill_stale(&mut r2, l2);
                }
                push((r2, l2), acc);
            }
        }
        if next.len() > LATTICE_STATE_CAP {
            return Err(OracleError::GridTooFine {
                cap: LATTICE_STATE_CAP,
            });
        }
        states = next;
    }

    let best_acc = states.values().min().copied().unwrap_or(0);
    let lattice_min = Ratio::new(best_acc, 2 * (grid * grid) as i64);
    let oracle = optimal(instance, instance.len().max(DEFAULT_CAP))?;
    Ok(lattice_min >= oracle.best_report.integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generators::example3;
    use crate::model::validate_instance;
    use crate::ratio::rat;

    #[test]
    fn chain_5_6_on_example3() {
        let inst = example3();
        let trace = chain_schedule(&Chain(vec![5, 6]), &inst);
        assert_eq!(trace.segments.len(), 2);
        assert_eq!(trace.segments[0].start, rat("5/4"));
        assert_eq!(trace.segments[0].end, rat("31/20"));
        assert_eq!(trace.segments[1].start, rat("9/5"));
        assert_eq!(trace.segments[1].end, rat("19/10"));
    }

    #[test]
    fn chain_overflow_dropped() {
        let inst = example3();
        // c1 = 29/20, c2 = 29/20 + 5/4 = 27/10 > 2: update 2 dropped.
        let trace = chain_schedule(&Chain(vec![1, 2]), &inst);
        assert_eq!(trace.completions, vec![(1, rat("29/20"))]);
    }

    #[test]
    fn empty_chain_empty_trace() {
        let inst = example3();
        let trace = chain_schedule(&Chain(vec![]), &inst);
        assert!(trace.segments.is_empty());
    }

    #[test]
    fn chain_prefix_monotone() {
        let inst = example3();
        let short = chain_schedule(&Chain(vec![3]), &inst);
        let long = chain_schedule(&Chain(vec![3, 6]), &inst);
        assert_eq!(long.completions.len(), 2);
        assert_eq!(long.completions[..1], short.completions[..]);
    }

    #[test]
    fn optimal_example3() {
        let inst = example3();
        let result = optimal(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(result.best_report.integral, rat("553/400"));
        assert_eq!(result.best_chain, Chain(vec![5, 6]));
        assert_eq!(result.chains_examined, 64);
    }

    #[test]
    fn optimal_empty_instance() {
        let inst = validate_instance(vec![], rat("1"), rat("0")).unwrap();
        let result = optimal(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(result.best_chain, Chain(vec![]));
        assert_eq!(result.best_report.integral, rat("1/2"));
    }

    #[test]
    fn optimal_single_stale_update_ties_with_idle() {
        // g = 0 equals the initial lambda, so completing the update
        // never lowers the age: both chains integrate to T^2/2 = 2 and
        // the empty chain wins lexicographically.
        let inst = validate_instance(vec![(rat("0"), rat("1"))], rat("2"), rat("0")).unwrap();
        let result = optimal(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(result.best_chain, Chain(vec![]));
        assert_eq!(result.best_report.integral, rat("2"));
    }

    #[test]
    fn optimal_single_fresh_update_serves_it() {
        let inst = validate_instance(vec![(rat("1/2"), rat("1"))], rat("2"), rat("0")).unwrap();
        let result = optimal(&inst, DEFAULT_CAP).unwrap();
        assert_eq!(result.best_chain, Chain(vec![1]));
        // Completes at 3/2: area = (3/2)^2/2 + trapezoid(1 -> 3/2 over 1/2).
        assert_eq!(result.best_report.integral, rat("7/4"));
    }

    #[test]
    fn cap_enforced() {
        let inst = example3();
        assert!(matches!(
            optimal(&inst, 3),
            Err(OracleError::InstanceTooLarge { n: 6, cap: 3 })
        ));
    }

    #[test]
    fn lower_bound_below_oracle() {
        let inst = example3();
        let oracle = optimal(&inst, DEFAULT_CAP).unwrap();
        assert!(aoi_integral_lower_bound(&inst) <= oracle.best_report.integral);
    }

    #[test]
    fn micro_validate_single_update() {
        let inst = validate_instance(vec![(rat("0"), rat("1"))], rat("2"), rat("0")).unwrap();
        assert!(micro_validate(&inst, 4).unwrap());
    }

    #[test]
    fn micro_validate_rejects_off_grid() {
        let inst = validate_instance(vec![(rat("1/3"), rat("1"))], rat("2"), rat("0")).unwrap();
        assert!(matches!(
            micro_validate(&inst, 4),
            Err(OracleError::NotOnGrid { grid: 4 })
        ));
    }
}
