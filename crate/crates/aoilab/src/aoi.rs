//! Exact AoI trajectories, integration, and per-update metrics.
//!
//! The age process is `Δ(t) = t - λ(t)` where `λ(t)` is the generation
//! time of the freshest completely transmitted update. Between
//! completions Δ is linear with slope 1, so the area under it is a sum
//! of closed-form trapezoids.

use serde::{Deserialize, Serialize};

use crate::model::{validate_trace, Instance, Trace, TraceViolation};
use crate::ratio::Ratio;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AoiError {
    #[error("invalid trace: {0:?}")]
    InvalidTrace(Vec<TraceViolation>),
    #[error("integration range [{from}, {to}] outside [{start}, {end}]")]
    RangeOutOfBounds {
        from: Ratio,
        to: Ratio,
        start: Ratio,
        end: Ratio,
    },
}

/// Piecewise description of `λ(t)`: breakpoints where λ strictly
/// increases, starting from the initial generation at t = 0.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AoiTrajectory {
    /// `(time, lambda)`, time-ordered, lambda strictly increasing.
    pub breakpoints: Vec<(Ratio, Ratio)>,
    pub start_time: Ratio,
    pub end_time: Ratio,
}

impl AoiTrajectory {
    /// Builds a trajectory directly from `(completion_time, generation)`
    /// pairs. Completions that do not strictly increase λ produce no
    /// breakpoint.
    pub fn from_completions(
        completions: impl IntoIterator<Item = (Ratio, Ratio)>,
        initial_generation: Ratio,
        start_time: Ratio,
        end_time: Ratio,
    ) -> Self {
        let mut breakpoints = vec![(start_time.clone(), initial_generation)];
        for (time, generation) in completions {
            if generation > breakpoints.last().unwrap().1 {
                breakpoints.push((time, generation));
            }
        }
        AoiTrajectory {
            breakpoints,
            start_time,
            end_time,
        }
    }

    /// λ(t) for `start_time <= t <= end_time`.
    pub fn lambda_at(&self, t: &Ratio) -> &Ratio {
        let mut lambda = &self.breakpoints[0].1;
        for (time, l) in &self.breakpoints {
            if time <= t {
                lambda = l;
            } else {
                break;
            }
        }
        lambda
    }

    /// Δ(t) = t − λ(t).
    pub fn age_at(&self, t: &Ratio) -> Ratio {
        t - self.lambda_at(t)
    }
}

/// Breakpoints of `λ^π(t)` from a validated trace.
pub fn trajectory_from_trace(
    trace: &Trace,
    instance: &Instance,
) -> Result<AoiTrajectory, AoiError> {
    let (ok, violations) = validate_trace(trace, instance);
    if !ok {
        return Err(AoiError::InvalidTrace(violations));
    }
    Ok(AoiTrajectory::from_completions(
        trace
            .completions
            .iter()
            .map(|(idx, time)| (time.clone(), instance.update(*idx).generation.clone())),
        instance.initial_generation().clone(),
        Ratio::zero(),
        instance.horizon().clone(),
    ))
}

/// Exact area under Δ(t) over `[from, to]`, by trapezoids per linear piece.
pub fn integrate(trajectory: &AoiTrajectory, from: &Ratio, to: &Ratio) -> Result<Ratio, AoiError> {
    if *from < trajectory.start_time || *to > trajectory.end_time || from > to {
        return Err(AoiError::RangeOutOfBounds {
            from: from.clone(),
            to: to.clone(),
            start: trajectory.start_time.clone(),
            end: trajectory.end_time.clone(),
        });
    }
    let half = Ratio::new(1, 2);
    let mut total = Ratio::zero();
    // Piece boundaries: from, each breakpoint time inside (from, to), to.
    let mut t0 = from.clone();
    let mut lambda = trajectory.lambda_at(from).clone();
    for (time, l) in &trajectory.breakpoints {
        if time <= &t0 {
            continue;
        }
        if time >= to {
            break;
        }
        // [t0, time) with constant lambda
        let a0 = &t0 - &lambda;
        let a1 = time - &lambda;
        total += &(&(&(a0 + a1) * &(time - &t0)) * &half);
        t0 = time.clone();
        lambda = l.clone();
    }
    let a0 = &t0 - &lambda;
    let a1 = to - &lambda;
    total += &(&(&(a0 + a1) * &(to - &t0)) * &half);
    Ok(total)
}

/// Per-update timing quantities extracted from one trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MetricsRow {
    pub index: usize,
    pub generation: Ratio,
    pub size: Ratio,
    /// δ_i = g_i − g_{i−1}, with g_0 := initial_generation.
    pub delta: Ratio,
    /// Earliest segment start among updates j ≥ i.
    pub b: Option<Ratio>,
    /// Earliest completion among updates j ≥ i.
    pub r: Option<Ratio>,
    /// w_i = b_i − g_i.
    pub w: Option<Ratio>,
    /// d_i = r_i − b_i.
    pub d: Option<Ratio>,
    /// ν_i = r_i − g_i.
    pub nu: Option<Ratio>,
    /// ν_i^min = min_{j≥i}(g_j + s_j) − g_i.
    pub nu_min: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerUpdateMetrics {
    pub rows: Vec<MetricsRow>,
}

pub fn per_update_metrics(
    trace: &Trace,
    instance: &Instance,
) -> Result<PerUpdateMetrics, AoiError> {
    let (ok, violations) = validate_trace(trace, instance);
    if !ok {
        return Err(AoiError::InvalidTrace(violations));
    }
    let n = instance.len();
    let starts = trace.first_start(n);
    let completions = trace.completion_time(n);
    // Suffix minima over j >= i.
    let suffix_min = |per_update: &[Option<Ratio>]| -> Vec<Option<Ratio>> {
        let mut out = vec![None; n];
        let mut best: Option<Ratio> = None;
        for i in (0..n).rev() {
            if let Some(v) = &per_update[i] {
                best = Some(match best {
                    Some(b) => b.min(v.clone()),
                    None => v.clone(),
                });
            }
            out[i] = best.clone();
        }
        out
    };
    let b_all = suffix_min(&starts);
    let r_all = suffix_min(&completions);
    let nu_min = instance.nu_min();
    let mut rows = Vec::with_capacity(n);
    let mut prev_g = instance.initial_generation().clone();
    for (i, u) in instance.updates().iter().enumerate() {
        let b = b_all[i].clone();
        let r = r_all[i].clone();
        let w = b.as_ref().map(|b| b - &u.generation);
        let d = match (&b, &r) {
            (Some(b), Some(r)) => Some(r - b),
            _ => None,
        };
        let nu = r.as_ref().map(|r| r - &u.generation);
        rows.push(MetricsRow {
            index: u.index,
            generation: u.generation.clone(),
            size: u.size.clone(),
            delta: &u.generation - &prev_g,
            b,
            r,
            w,
            d,
            nu,
            nu_min: nu_min[i].clone(),
        });
        prev_g = u.generation.clone();
    }
    Ok(PerUpdateMetrics { rows })
}

/// Exact integral, average, and decomposition terms for one trace.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AoiReport {
    /// ∫_0^T Δ(t) dt, exact.
    pub integral: Ratio,
    /// integral / T.
    pub average: Ratio,
    /// δ_i²/2 + δ_i ν_i for each update with defined ν_i.
    pub terms: Vec<Ratio>,
    /// integral − Σ terms. Equals (T − g_R)²/2 when every update
    /// completes by T and λ(0) = 0.
    pub tail: Ratio,
}

pub fn average_aoi(trace: &Trace, instance: &Instance) -> Result<AoiReport, AoiError> {
    let trajectory = trajectory_from_trace(trace, instance)?;
    let integral = integrate(&trajectory, &Ratio::zero(), instance.horizon())?;
    let metrics = per_update_metrics(trace, instance)?;
    let half = Ratio::new(1, 2);
    let terms: Vec<Ratio> = metrics
        .rows
        .iter()
        .filter_map(|row| {
            row.nu
                .as_ref()
                .map(|nu| &(&(&row.delta * &row.delta) * &half) + &(&row.delta * nu))
        })
        .collect();
    let mut tail = integral.clone();
    for t in &terms {
        tail -= t;
    }
    let average = &integral / instance.horizon();
    Ok(AoiReport {
        integral,
        average,
        terms,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::validate_instance;
    use crate::ratio::rat;

    /// Example instance: g = (0, 2, 4), sizes chosen so FCFS completes
    /// at r = (1, 3, 5); T = 5.
    fn three_step_instance() -> Instance {
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

    fn three_step_trajectory() -> AoiTrajectory {
        AoiTrajectory::from_completions(
            vec![
                (rat("1"), rat("0")),
                (rat("3"), rat("2")),
                (rat("5"), rat("4")),
            ],
            rat("0"),
            rat("0"),
            rat("5"),
        )
    }

    /// Independent oracle: integrates t − λ(t) by exact trapezoids over
    /// an explicit event partition built directly from (r, g) pairs,
    /// without using `AoiTrajectory` piece logic.
    fn trapezoid_oracle(
        completions: &[(Ratio, Ratio)],
        lambda0: Ratio,
        from: Ratio,
        to: Ratio,
    ) -> Ratio {
        let mut cuts: Vec<Ratio> = vec![from.clone(), to.clone()];
        for (r, _) in completions {
            if *r > from && *r < to {
                cuts.push(r.clone());
            }
        }
        cuts.sort();
        cuts.dedup();
        let lambda = |t: &Ratio| -> Ratio {
            let mut l = lambda0.clone();
            for (r, g) in completions {
                if r <= t && *g > l {
                    l = g.clone();
                }
            }
            l
        };
        let half = rat("1/2");
        let mut total = Ratio::zero();
        for pair in cuts.windows(2) {
            let (t0, t1) = (&pair[0], &pair[1]);
            // λ constant on (t0, t1); sample at right end minus epsilon
            // is λ(t0) since jumps happen at cut points.
            let l = lambda(t0);
            let a0 = t0 - &l;
            let a1 = t1 - &l;
            total += &(&(&(a0 + a1) * &(t1 - t0)) * &half);
        }
        total
    }

    #[test]
    fn three_step_lambda_breakpoints() {
        let traj = three_step_trajectory();
        // Completion at t=1 has g=0 which does not increase lambda.
        assert_eq!(
            traj.breakpoints,
            vec![
                (rat("0"), rat("0")),
                (rat("3"), rat("2")),
                (rat("5"), rat("4")),
            ]
        );
    }

    #[test]
    fn three_step_integral_matches_independent_oracle() {
        let traj = three_step_trajectory();
        let completions = vec![
            (rat("1"), rat("0")),
            (rat("3"), rat("2")),
            (rat("5"), rat("4")),
        ];
        let oracle = trapezoid_oracle(&completions, rat("0"), rat("0"), rat("5"));
        assert_eq!(oracle, rat("17/2"));
        assert_eq!(
            integrate(&traj, &rat("0"), &rat("5")).unwrap(),
            rat("17/2")
        );
    }

    #[test]
    fn empty_trace_age_grows_linearly() {
        let inst = validate_instance(vec![], rat("1"), rat("0")).unwrap();
        let trace = Trace {
            instance_id: String::new(),
            segments: vec![],
            completions: vec![],
        };
        let traj = trajectory_from_trace(&trace, &inst).unwrap();
        assert_eq!(traj.breakpoints.len(), 1);
        assert_eq!(traj.age_at(&rat("1/2")), rat("1/2"));
        assert_eq!(
            integrate(&traj, &rat("0"), &rat("1")).unwrap(),
            rat("1/2")
        );
    }

    #[test]
    fn integrate_empty_interval_is_zero() {
        let traj = three_step_trajectory();
        assert_eq!(integrate(&traj, &rat("2"), &rat("2")).unwrap(), Ratio::zero());
    }

    #[test]
    fn integrate_additive() {
        let traj = three_step_trajectory();
        let whole = integrate(&traj, &rat("0"), &rat("5")).unwrap();
        let a = integrate(&traj, &rat("0"), &rat("27/10")).unwrap();
        let b = integrate(&traj, &rat("27/10"), &rat("5")).unwrap();
        assert_eq!(whole, a + b);
    }

    #[test]
    fn integrate_range_checked() {
        let traj = three_step_trajectory();
        assert!(matches!(
            integrate(&traj, &rat("-1"), &rat("2")),
            Err(AoiError::RangeOutOfBounds { .. })
        ));
        assert!(matches!(
            integrate(&traj, &rat("0"), &rat("6")),
            Err(AoiError::RangeOutOfBounds { .. })
        ));
    }

    #[test]
    fn three_step_decomposition() {
        // FCFS on the three-step instance realizes r = (1, 3, 5).
        let inst = three_step_instance();
        let trace = Trace {
            instance_id: String::new(),
            segments: vec![
                crate::model::Segment {
                    update_index: 1,
                    start: rat("0"),
                    end: rat("1"),
                },
                crate::model::Segment {
                    update_index: 2,
                    start: rat("2"),
                    end: rat("3"),
                },
                crate::model::Segment {
                    update_index: 3,
                    start: rat("4"),
                    end: rat("5"),
                },
            ],
            completions: vec![(1, rat("1")), (2, rat("3")), (3, rat("5"))],
        };
        let report = average_aoi(&trace, &inst).unwrap();
        assert_eq!(report.integral, rat("17/2"));
        assert_eq!(report.terms, vec![rat("0"), rat("4"), rat("4")]);
        assert_eq!(report.tail, rat("1/2"));
        assert_eq!(report.average, rat("17/10"));
    }

    #[test]
    fn single_update_metrics() {
        let inst =
            validate_instance(vec![(rat("0"), rat("1"))], rat("2"), rat("0")).unwrap();
        let trace = Trace {
            instance_id: String::new(),
            segments: vec![crate::model::Segment {
                update_index: 1,
                start: rat("0"),
                end: rat("1"),
            }],
            completions: vec![(1, rat("1"))],
        };
        let m = per_update_metrics(&trace, &inst).unwrap();
        let row = &m.rows[0];
        assert_eq!(row.b, Some(rat("0")));
        assert_eq!(row.w, Some(rat("0")));
        assert_eq!(row.d, Some(rat("1")));
        assert_eq!(row.nu, Some(rat("1")));
        assert_eq!(row.nu_min, rat("1"));
    }
}
