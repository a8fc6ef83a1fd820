//! Domain types: updates, instances, schedules.
//!
//! An [`Instance`] is a finite, sorted arrival sequence plus an
//! evaluation horizon. A [`Trace`] is the transmission record of one
//! policy run: non-overlapping segments and the completion instants
//! they induce. All types are immutable values after construction.

use serde::{Deserialize, Serialize};

use crate::ratio::Ratio;

/// One arrival: generation time `g` and size `s` (service time).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Update {
    /// 1-based arrival index, dense after validation.
    pub index: usize,
    pub generation: Ratio,
    pub size: Ratio,
}

/// A validated arrival sequence with evaluation horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    updates: Vec<Update>,
    horizon: Ratio,
    initial_generation: Ratio,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ModelError {
    #[error("update {index} has non-positive size {size}")]
    NonPositiveSize { index: usize, size: Ratio },
    #[error("update {index} generated at {generation}, at or beyond horizon {horizon}")]
    GenerationBeyondHorizon {
        index: usize,
        generation: Ratio,
        horizon: Ratio,
    },
    #[error("update {index} has negative generation {generation}")]
    NegativeGeneration { index: usize, generation: Ratio },
    #[error("initial generation {initial} exceeds first generation {first}")]
    InitialGenerationTooLarge { initial: Ratio, first: Ratio },
    #[error("horizon {0} is not positive")]
    NonPositiveHorizon(Ratio),
}

/// Builds a canonical [`Instance`] from raw `(generation, size)` pairs.
///
/// Updates are sorted by generation (stable, so simultaneous arrivals
/// keep their input order) and reindexed 1..n.
pub fn validate_instance(
    raw: Vec<(Ratio, Ratio)>,
    horizon: Ratio,
    initial_generation: Ratio,
) -> Result<Instance, ModelError> {
    if !horizon.is_positive() {
        return Err(ModelError::NonPositiveHorizon(horizon));
    }
    for (k, (g, s)) in raw.iter().enumerate() {
        if !s.is_positive() {
            return Err(ModelError::NonPositiveSize {
                index: k + 1,
                size: s.clone(),
            });
        }
        if g.is_negative() {
            return Err(ModelError::NegativeGeneration {
                index: k + 1,
                generation: g.clone(),
            });
        }
        if *g >= horizon {
            return Err(ModelError::GenerationBeyondHorizon {
                index: k + 1,
                generation: g.clone(),
                horizon: horizon.clone(),
            });
        }
    }
    let mut sorted = raw;
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some((first, _)) = sorted.first() {
        if initial_generation > *first {
            return Err(ModelError::InitialGenerationTooLarge {
                initial: initial_generation,
                first: first.clone(),
            });
        }
    } else if initial_generation > horizon {
        return Err(ModelError::InitialGenerationTooLarge {
            initial: initial_generation,
            first: horizon,
        });
    }
    let updates = sorted
        .into_iter()
        .enumerate()
        .map(|(k, (generation, size))| Update {
            index: k + 1,
            generation,
            size,
        })
        .collect();
    Ok(Instance {
        updates,
        horizon,
        initial_generation,
    })
}

impl Instance {
    pub fn updates(&self) -> &[Update] {
        &self.updates
    }

    pub fn len(&self) -> usize {
        self.updates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.updates.is_empty()
    }

    /// Update by 1-based index; panics if out of range.
    pub fn update(&self, index: usize) -> &Update {
        &self.updates[index - 1]
    }

    pub fn horizon(&self) -> &Ratio {
        &self.horizon
    }

    pub fn initial_generation(&self) -> &Ratio {
        &self.initial_generation
    }

    /// `min_{j >= i} (g_j + s_j) - g_i` for each i, by suffix scan.
    pub fn nu_min(&self) -> Vec<Ratio> {
        let mut suffix: Vec<Ratio> = Vec::with_capacity(self.updates.len());
        let mut best: Option<Ratio> = None;
        for u in self.updates.iter().rev() {
            let c = &u.generation + &u.size;
            best = Some(match best {
                Some(b) => b.min(c),
                None => c,
            });
            suffix.push(best.clone().unwrap());
        }
        suffix.reverse();
        suffix
            .into_iter()
            .zip(&self.updates)
            .map(|(m, u)| m - &u.generation)
            .collect()
    }
}

/// Contiguous transmission of one update.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub update_index: usize,
    pub start: Ratio,
    pub end: Ratio,
}

/// Transmission record of one run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    /// Content hash of the canonical instance serialization.
    pub instance_id: String,
    /// Time-ordered, pairwise non-overlapping.
    pub segments: Vec<Segment>,
    /// `(update_index, completion_time)`, strictly ordered in time.
    pub completions: Vec<(usize, Ratio)>,
}

/// Named trace invariant violations; data, not errors.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum TraceViolation {
    UnknownUpdate { update_index: usize },
    Overlap { first: Segment, second: Segment },
    EmptySegment { segment: Segment },
    StartsBeforeGeneration { segment: Segment },
    EndsAfterHorizon { segment: Segment },
    WorkExceedsSize { update_index: usize, total: Ratio },
    CompletionWithoutFullWork { update_index: usize },
    CompletionTimeMismatch { update_index: usize, expected: Ratio },
    MissingCompletion { update_index: usize },
    CompletionsOutOfOrder { update_index: usize },
}

/// Checks every [`Trace`] invariant against `instance`.
///
/// Returns `true` iff the trace is valid; the violation list names each
/// broken invariant with the offending segment or completion.
pub fn validate_trace(trace: &Trace, instance: &Instance) -> (bool, Vec<TraceViolation>) {
    let mut violations = Vec::new();
    let n = instance.len();
    for pair in trace.segments.windows(2) {
        if pair[1].start < pair[0].end {
            violations.push(TraceViolation::Overlap {
                first: pair[0].clone(),
                second: pair[1].clone(),
            });
        }
    }
    let mut work: Vec<Ratio> = vec![Ratio::zero(); n];
    let mut last_end: Vec<Option<Ratio>> = vec![None; n];
    for seg in &trace.segments {
        if seg.update_index == 0 || seg.update_index > n {
            violations.push(TraceViolation::UnknownUpdate {
                update_index: seg.update_index,
            });
            continue;
        }
        let u = instance.update(seg.update_index);
        if seg.start >= seg.end {
            violations.push(TraceViolation::EmptySegment {
                segment: seg.clone(),
            });
        }
        if seg.start < u.generation {
            violations.push(TraceViolation::StartsBeforeGeneration {
                segment: seg.clone(),
            });
        }
        if seg.end > *instance.horizon() {
            violations.push(TraceViolation::EndsAfterHorizon {
                segment: seg.clone(),
            });
        }
        let i = seg.update_index - 1;
        work[i] += &(&seg.end - &seg.start);
        last_end[i] = Some(seg.end.clone());
    }
    let mut completed = vec![false; n];
    let mut prev_time: Option<&Ratio> = None;
    for (idx, time) in &trace.completions {
        if *idx == 0 || *idx > n {
            violations.push(TraceViolation::UnknownUpdate { update_index: *idx });
            continue;
        }
        if let Some(p) = prev_time {
            if time <= p {
                violations.push(TraceViolation::CompletionsOutOfOrder { update_index: *idx });
            }
        }
        prev_time = Some(time);
        completed[*idx - 1] = true;
        let i = *idx - 1;
        if work[i] != instance.update(*idx).size {
            violations.push(TraceViolation::CompletionWithoutFullWork { update_index: *idx });
        } else if last_end[i].as_ref() != Some(time) {
            violations.push(TraceViolation::CompletionTimeMismatch {
                update_index: *idx,
                expected: last_end[i].clone().unwrap(),
            });
        }
    }
    for i in 0..n {
        if work[i] > instance.update(i + 1).size {
            violations.push(TraceViolation::WorkExceedsSize {
                update_index: i + 1,
                total: work[i].clone(),
            });
        }
        if !completed[i] && work[i] == instance.update(i + 1).size {
            violations.push(TraceViolation::MissingCompletion { update_index: i + 1 });
        }
    }
    (violations.is_empty(), violations)
}

impl Trace {
    /// First segment start per update, if the update was ever served.
    pub fn first_start(&self, n: usize) -> Vec<Option<Ratio>> {
        let mut out = vec![None; n];
        for seg in &self.segments {
            let slot = &mut out[seg.update_index - 1];
            if slot.is_none() {
                *slot = Some(seg.start.clone());
            }
        }
        out
    }

    /// Completion time per update, if completed.
    pub fn completion_time(&self, n: usize) -> Vec<Option<Ratio>> {
        let mut out = vec![None; n];
        for (idx, time) in &self.completions {
            out[*idx - 1] = Some(time.clone());
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratio::rat;

    pub fn example3_raw() -> Vec<(Ratio, Ratio)> {
        [
            ("0", "29/20"),
            ("1/4", "5/4"),
            ("3/4", "1"),
            ("1", "1/2"),
            ("5/4", "3/10"),
            ("9/5", "1/10"),
        ]
        .iter()
        .map(|(g, s)| (rat(g), rat(s)))
        .collect()
    }

    #[test]
    fn example3_is_valid() {
        let inst = validate_instance(example3_raw(), rat("2"), rat("0")).unwrap();
        assert_eq!(inst.len(), 6);
        assert_eq!(inst.update(4).generation, rat("1"));
        assert_eq!(inst.update(4).size, rat("1/2"));
        assert_eq!(inst.update(6).index, 6);
    }

    #[test]
    fn empty_instance_is_valid() {
        let inst = validate_instance(vec![], rat("1"), rat("0")).unwrap();
        assert!(inst.is_empty());
    }

    #[test]
    fn zero_size_rejected() {
        let err = validate_instance(vec![(rat("0"), rat("0"))], rat("1"), rat("0")).unwrap_err();
        assert!(matches!(err, ModelError::NonPositiveSize { index: 1, .. }));
    }

    #[test]
    fn generation_at_horizon_rejected() {
        let err = validate_instance(vec![(rat("1"), rat("1"))], rat("1"), rat("0")).unwrap_err();
        assert!(matches!(err, ModelError::GenerationBeyondHorizon { .. }));
    }

    #[test]
    fn negative_generation_rejected() {
        let err = validate_instance(vec![(rat("-1"), rat("1"))], rat("2"), rat("0")).unwrap_err();
        assert!(matches!(err, ModelError::NegativeGeneration { .. }));
    }

    #[test]
    fn initial_generation_bounds() {
        let err =
            validate_instance(vec![(rat("1/2"), rat("1"))], rat("2"), rat("1")).unwrap_err();
        assert!(matches!(err, ModelError::InitialGenerationTooLarge { .. }));
        // Empty instance: bound is the horizon.
        assert!(validate_instance(vec![], rat("1"), rat("1")).is_ok());
        assert!(validate_instance(vec![], rat("1"), rat("2")).is_err());
    }

    #[test]
    fn sort_is_stable_on_ties() {
        let inst = validate_instance(
            vec![(rat("1"), rat("3")), (rat("1"), rat("4")), (rat("0"), rat("5"))],
            rat("2"),
            rat("0"),
        )
        .unwrap();
        let sizes: Vec<_> = inst.updates().iter().map(|u| u.size.clone()).collect();
        assert_eq!(sizes, vec![rat("5"), rat("3"), rat("4")]);
    }

    #[test]
    fn validate_instance_idempotent() {
        let inst = validate_instance(example3_raw(), rat("2"), rat("0")).unwrap();
        let again = validate_instance(
            inst.updates()
                .iter()
                .map(|u| (u.generation.clone(), u.size.clone()))
                .collect(),
            inst.horizon().clone(),
            inst.initial_generation().clone(),
        )
        .unwrap();
        assert_eq!(inst, again);
    }

    #[test]
    fn nu_min_example3() {
        let inst = validate_instance(example3_raw(), rat("2"), rat("0")).unwrap();
        let nu_min = inst.nu_min();
        // min(1.45, 1.5, 1.75, 1.5, 1.55, 1.9) - 0 = 1.45
        assert_eq!(nu_min[0], rat("29/20"));
        assert_eq!(nu_min[5], rat("1/10"));
    }

    fn seg(i: usize, a: &str, b: &str) -> Segment {
        Segment {
            update_index: i,
            start: rat(a),
            end: rat(b),
        }
    }

    #[test]
    fn trace_overlap_detected() {
        let inst = validate_instance(example3_raw(), rat("2"), rat("0")).unwrap();
        let trace = Trace {
            instance_id: String::new(),
            segments: vec![seg(2, "1/4", "1"), seg(3, "3/4", "1")],
            completions: vec![],
        };
        let (ok, violations) = validate_trace(&trace, &inst);
        assert!(!ok);
        assert!(violations
            .iter()
            .any(|v| matches!(v, TraceViolation::Overlap { .. })));
    }

    #[test]
    fn trace_start_before_generation_detected() {
        let inst = validate_instance(example3_raw(), rat("2"), rat("0")).unwrap();
        let trace = Trace {
            instance_id: String::new(),
            segments: vec![seg(2, "0", "1/4")],
            completions: vec![],
        };
        let (ok, violations) = validate_trace(&trace, &inst);
        assert!(!ok);
        assert!(violations
            .iter()
            .any(|v| matches!(v, TraceViolation::StartsBeforeGeneration { .. })));
    }

    #[test]
    fn completion_consistency() {
        let inst =
            validate_instance(vec![(rat("0"), rat("1"))], rat("2"), rat("0")).unwrap();
        // Full work but no completion listed.
        let t = Trace {
            instance_id: String::new(),
            segments: vec![seg(1, "0", "1")],
            completions: vec![],
        };
        let (ok, v) = validate_trace(&t, &inst);
        assert!(!ok);
        assert!(v
            .iter()
            .any(|x| matches!(x, TraceViolation::MissingCompletion { update_index: 1 })));
        // Completion listed without full work.
        let t = Trace {
            instance_id: String::new(),
            segments: vec![seg(1, "0", "1/2")],
            completions: vec![(1, rat("1/2"))],
        };
        let (ok, v) = validate_trace(&t, &inst);
        assert!(!ok);
        assert!(v
            .iter()
            .any(|x| matches!(x, TraceViolation::CompletionWithoutFullWork { .. })));
    }
}
