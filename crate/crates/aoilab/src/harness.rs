//! Property checks over traces and exact competitive-ratio evaluation.
//!
//! Each check returns a [`CheckReport`] rather than panicking, so
//! corpora can be swept and failures inspected with witnesses. All
//! comparisons are exact; there are no tolerances.

use rayon::prelude::*;

use crate::aoi::{average_aoi, per_update_metrics, AoiError};
use crate::engine::{simulate, EngineError};
use crate::model::Instance;
use crate::oracle::{self, OracleError};
use crate::policies::{policy_for, PolicyId};
use crate::ratio::{rat, Ratio};

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct CheckReport {
    pub check_id: String,
    pub instance_id: String,
    pub passed: bool,
    /// True when the check's precondition does not hold; `passed` is
    /// then vacuously true.
    pub skipped: bool,
    /// Human-readable descriptions of each violation found.
    pub witnesses: Vec<String>,
}

impl CheckReport {
    fn new(check_id: impl Into<String>, instance: &Instance) -> Self {
        CheckReport {
            check_id: check_id.into(),
            instance_id: crate::io::instance_id(instance),
            passed: true,
            skipped: false,
            witnesses: Vec::new(),
        }
    }

    fn fail(&mut self, witness: String) {
        self.passed = false;
        self.witnesses.push(witness);
    }

    fn skip(mut self, reason: String) -> Self {
        self.skipped = true;
        self.witnesses.push(reason);
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Aoi(#[from] AoiError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("optimal integral is not positive; ratio undefined")]
    DegenerateOptimal,
}

/// Every completed update's system time is at least its lower envelope:
/// ν_i ≥ ν_i^min, for any policy.
pub fn check_system_time_lower_bound(
    instance: &Instance,
    policy: PolicyId,
) -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new(
        format!("system-time-lower-bound/{}", policy.name()),
        instance,
    );
    let trace = simulate(instance, policy_for(policy).as_ref())?;
    let metrics = per_update_metrics(&trace, instance)?;
    for row in &metrics.rows {
        if let Some(nu) = &row.nu {
            if *nu < row.nu_min {
                report.fail(format!(
                    "update {}: nu = {} < nu_min = {}",
                    row.index, nu, row.nu_min
                ));
            }
        }
    }
    Ok(report)
}

/// When every update completes, the AoI integral equals the per-update
/// decomposition plus the closed-form tail
/// `(T − g_n)²/2 − λ0²/2`; otherwise the check is skipped.
pub fn check_decomposition(
    instance: &Instance,
    policy: PolicyId,
) -> Result<CheckReport, HarnessError> {
    let report = CheckReport::new(format!("decomposition/{}", policy.name()), instance);
    let trace = simulate(instance, policy_for(policy).as_ref())?;
    if trace.completions.len() != instance.len() {
        return Ok(report.skip(format!(
            "only {}/{} updates complete",
            trace.completions.len(),
            instance.len()
        )));
    }
    let mut report = report;
    let aoi = average_aoi(&trace, instance)?;
    let g_last = instance
        .updates()
        .last()
        .map(|u| u.generation.clone())
        .unwrap_or_else(|| instance.initial_generation().clone());
    let lambda0 = instance.initial_generation();
    let span = instance.horizon() - &g_last;
    let half = rat("1/2");
    let expected_tail = &(&(&span * &span) * &half) - &(&(lambda0 * lambda0) * &half);
    if aoi.tail != expected_tail {
        report.fail(format!(
            "tail = {} but closed form gives {}",
            aoi.tail, expected_tail
        ));
    }
    let mut total = aoi.tail.clone();
    for t in &aoi.terms {
        total += t;
    }
    if total != aoi.integral {
        report.fail(format!(
            "terms + tail = {} but integral = {}",
            total, aoi.integral
        ));
    }
    Ok(report)
}

/// Shortest-remaining-first with idling, against the offline optimum:
/// per-update waiting is at most twice the optimal system time
/// (`w_i ≤ 2 ν★_i`), and the weighted transmission times satisfy
/// `Σ δ_i d_i ≤ 2 Σ δ_i ν★_i` over updates both schedules complete.
pub fn check_srpt_plus_vs_optimal(
    instance: &Instance,
    cap: usize,
) -> Result<CheckReport, HarnessError> {
    let opt = oracle::optimal(instance, cap)?;
    check_srpt_plus_against(instance, &opt)
}

/// Same check against an already-solved optimum, so corpus sweeps solve
/// each instance once.
pub fn check_srpt_plus_against(
    instance: &Instance,
    opt: &oracle::OracleResult,
) -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("srpt-plus-vs-optimal", instance);
    let trace = simulate(instance, policy_for(PolicyId::SrptPlus).as_ref())?;
    let metrics = per_update_metrics(&trace, instance)?;
    let opt_metrics = per_update_metrics(&opt.best_trace, instance)?;
    let two = rat("2");
    let mut weighted_d = Ratio::zero();
    let mut weighted_nu_star = Ratio::zero();
    for (row, opt_row) in metrics.rows.iter().zip(&opt_metrics.rows) {
        let (Some(nu_star), Some(w), Some(d)) = (&opt_row.nu, &row.w, &row.d) else {
            continue;
        };
        if row.nu.is_none() {
            continue;
        }
        if *w > &two * nu_star {
            report.fail(format!(
                "update {}: w = {} > 2 nu_star = {}",
                row.index,
                w,
                &two * nu_star
            ));
        }
        weighted_d += &(&row.delta * d);
        weighted_nu_star += &(&row.delta * nu_star);
    }
    if weighted_d > &two * &weighted_nu_star {
        report.fail(format!(
            "sum delta*d = {} > 2 sum delta*nu_star = {}",
            weighted_d,
            &two * &weighted_nu_star
        ));
    }
    Ok(report)
}

/// Latest-first with shortest-remaining preemption. Three properties:
/// (1) waiting is bounded by the envelope, `w_i ≤ ν_i^min`;
/// (2) an update begins transmission only while it is the latest
/// generated one, i.e. strictly before the next generation;
/// (3) if update i is begun at time b, the earliest completion among
/// updates j ≥ i lands exactly at `min(b + s_i, min_{j>i}(g_j + s_j))`
/// (no completion at all when that instant is past the horizon), and
/// the elapsed time from b to it is at most ν_i^min.
pub fn check_srpt_l_envelope(instance: &Instance) -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("srpt-l-envelope", instance);
    let trace = simulate(instance, policy_for(PolicyId::SrptL).as_ref())?;
    let metrics = per_update_metrics(&trace, instance)?;
    for row in &metrics.rows {
        if let (Some(w), Some(_)) = (&row.w, &row.nu) {
            if *w > row.nu_min {
                report.fail(format!(
                    "update {}: w = {} > nu_min = {}",
                    row.index, w, row.nu_min
                ));
            }
        }
    }
    let n = instance.len();
    let mut own_start: Vec<Option<Ratio>> = vec![None; n];
    for seg in &trace.segments {
        let slot = &mut own_start[seg.update_index - 1];
        if slot.is_none() {
            *slot = Some(seg.start.clone());
        }
    }
    // Earliest possible completion instant among strictly later updates.
    let mut later_min: Vec<Option<Ratio>> = vec![None; n];
    let mut best: Option<Ratio> = None;
    for i in (0..n).rev() {
        later_min[i] = best.clone();
        let u = &instance.updates()[i];
        let c = &u.generation + &u.size;
        best = Some(match best {
            Some(b) => b.min(c),
            None => c,
        });
    }
    for (i, b) in own_start.iter().enumerate() {
        let Some(b) = b else { continue };
        let u = &instance.updates()[i];
        let latest_generated = instance
            .updates()
            .iter()
            .filter(|v| v.generation <= *b)
            .map(|v| &v.generation)
            .max()
            .unwrap();
        if *latest_generated != u.generation {
            report.fail(format!(
                "update {} begun at {} although {} is the latest generation",
                u.index, b, latest_generated
            ));
        }
        let mut expected = b + &u.size;
        if let Some(m) = &later_min[i] {
            expected = expected.min(m.clone());
        }
        let r_suffix = &metrics.rows[i].r;
        if expected > *instance.horizon() {
            if let Some(r) = r_suffix {
                report.fail(format!(
                    "update {}: completion {} found past predicted horizon overflow",
                    u.index, r
                ));
            }
        } else {
            match r_suffix {
                Some(r) if *r == expected => {
                    let d = r - b;
                    if d > row_nu_min(&metrics.rows[i]) {
                        report.fail(format!(
                            "update {}: d = {} > nu_min = {}",
                            u.index,
                            d,
                            metrics.rows[i].nu_min
                        ));
                    }
                }
                other => {
                    report.fail(format!(
                        "update {}: earliest completion {:?} != predicted {}",
                        u.index, other, expected
                    ));
                }
            }
        }
    }
    Ok(report)
}

fn row_nu_min(row: &crate::aoi::MetricsRow) -> Ratio {
    row.nu_min.clone()
}

/// No policy's exact integral may fall below the enumerated optimum.
pub fn check_oracle_dominance(
    instance: &Instance,
    opt: &oracle::OracleResult,
) -> Result<CheckReport, HarnessError> {
    let mut report = CheckReport::new("oracle-dominance", instance);
    for id in PolicyId::ALL {
        let trace = simulate(instance, policy_for(id).as_ref())?;
        let integral = average_aoi(&trace, instance)?.integral;
        if integral < opt.best_report.integral {
            report.fail(format!(
                "{}: integral {} beats optimal {}",
                id.name(),
                integral,
                opt.best_report.integral
            ));
        }
    }
    Ok(report)
}

/// Exact `policy integral / optimal integral` on one instance.
pub fn competitive_ratio(
    instance: &Instance,
    policy: PolicyId,
    cap: usize,
) -> Result<Ratio, HarnessError> {
    let opt = oracle::optimal(instance, cap)?;
    if !opt.best_report.integral.is_positive() {
        return Err(HarnessError::DegenerateOptimal);
    }
    let trace = simulate(instance, policy_for(policy).as_ref())?;
    let report = average_aoi(&trace, instance)?;
    Ok(&report.integral / &opt.best_report.integral)
}

/// Upper bound on the competitive ratio without running the chain
/// oracle: policy integral over the envelope lower bound. Valid for
/// instances too large to enumerate.
pub fn ratio_upper_bound_via_envelope(
    instance: &Instance,
    policy: PolicyId,
) -> Result<Ratio, HarnessError> {
    let lb = oracle::aoi_integral_lower_bound(instance);
    if !lb.is_positive() {
        return Err(HarnessError::DegenerateOptimal);
    }
    let trace = simulate(instance, policy_for(policy).as_ref())?;
    let report = average_aoi(&trace, instance)?;
    Ok(&report.integral / &lb)
}

/// Everything we evaluate per corpus instance in one pass.
#[derive(Debug, Clone)]
pub struct InstanceEvaluation {
    pub instance_id: String,
    pub optimal_integral: Ratio,
    /// `(policy, integral, ratio)`; ratio omitted when optimal is 0.
    pub per_policy: Vec<(PolicyId, Ratio, Option<Ratio>)>,
    pub checks: Vec<CheckReport>,
}

/// All structural checks on one instance (ratio bounds excluded).
pub fn run_all_checks(instance: &Instance, cap: usize) -> Result<Vec<CheckReport>, HarnessError> {
    let opt = oracle::optimal(instance, cap)?;
    run_all_checks_against(instance, &opt)
}

/// As [`run_all_checks`], with the optimum supplied by the caller.
pub fn run_all_checks_against(
    instance: &Instance,
    opt: &oracle::OracleResult,
) -> Result<Vec<CheckReport>, HarnessError> {
    let mut out = Vec::new();
    for id in PolicyId::ALL {
        out.push(check_system_time_lower_bound(instance, id)?);
        out.push(check_decomposition(instance, id)?);
    }
    out.push(check_srpt_plus_against(instance, opt)?);
    out.push(check_srpt_l_envelope(instance)?);
    out.push(check_oracle_dominance(instance, opt)?);
    Ok(out)
}

/// Oracle, all policies, and all checks on each instance, in parallel.
pub fn evaluate_corpus(
    instances: &[Instance],
    cap: usize,
) -> Result<Vec<InstanceEvaluation>, HarnessError> {
    instances
        .par_iter()
        .map(|instance| {
            let opt = oracle::optimal(instance, cap)?;
            let per_policy = PolicyId::ALL
                .iter()
                .map(|&id| {
                    let trace = simulate(instance, policy_for(id).as_ref())?;
                    let report = average_aoi(&trace, instance)?;
                    let ratio = if opt.best_report.integral.is_positive() {
                        Some(&report.integral / &opt.best_report.integral)
                    } else {
                        None
                    };
                    Ok((id, report.integral, ratio))
                })
                .collect::<Result<Vec<_>, HarnessError>>()?;
            let checks = run_all_checks_against(instance, &opt)?;
            Ok(InstanceEvaluation {
                instance_id: crate::io::instance_id(instance),
                optimal_integral: opt.best_report.integral,
                per_policy,
                checks,
            })
        })
        .collect()
}
