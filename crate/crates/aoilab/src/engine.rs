//! Event-driven continuous-time simulator.
//!
//! The server advances between arrival and completion events. The
//! policy is consulted exactly once per event timestamp (after all
//! same-time events are ingested, completions before arrivals) and
//! additionally at t = 0; between consultations the decision is held
//! fixed and the transmitted update drains at unit rate.

use crate::model::{Instance, Segment, Trace};
use crate::ratio::Ratio;

/// What a causal policy is allowed to see at a decision epoch.
#[derive(Debug, Clone)]
pub struct CausalState {
    pub now: Ratio,
    /// Generation time of the freshest completely transmitted update.
    pub lambda: Ratio,
    /// Update under transmission, with remaining size.
    pub in_service: Option<(usize, Ratio)>,
    /// Arrived, incomplete, not-in-service updates: (index, generation, remaining).
    pub pending: Vec<(usize, Ratio, Ratio)>,
    /// Indices of updates generated at exactly `now`.
    pub newly_arrived: Vec<usize>,
    /// Completed update with the largest (generation, index), if any.
    /// Needed by latest-first policies to tell "the latest update is
    /// already done" apart from "nothing is done yet" when generations
    /// collide with the initial lambda.
    pub latest_completion: Option<(Ratio, usize)>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Decision {
    Transmit(usize),
    Idle,
}

/// A deterministic causal decision rule.
pub trait Policy {
    fn name(&self) -> &'static str;
    fn decide(&self, state: &CausalState) -> Decision;
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum EngineError {
    #[error("policy named unknown or finished update {update_index} at t = {now}")]
    PolicyProtocolViolation { update_index: usize, now: Ratio },
}

struct Job {
    index: usize,
    generation: Ratio,
    remaining: Ratio,
}

/// Runs `policy` on `instance` and returns the transmission trace.
pub fn simulate(instance: &Instance, policy: &dyn Policy) -> Result<Trace, EngineError> {
    let horizon = instance.horizon().clone();
    let mut now = Ratio::zero();
    let mut lambda = instance.initial_generation().clone();
    let mut latest_completion: Option<(Ratio, usize)> = None;
    let mut pending: Vec<Job> = Vec::new();
    let mut in_service: Option<(Job, Ratio)> = None; // (job, segment start)
    let mut next_arrival = 0usize; // index into instance.updates()
    let mut segments: Vec<Segment> = Vec::new();
    let mut completions: Vec<(usize, Ratio)> = Vec::new();

    loop {
        // Ingest arrivals at `now` (in index order; the instance is sorted).
        let mut newly_arrived = Vec::new();
        while next_arrival < instance.len() {
            let u = &instance.updates()[next_arrival];
            if u.generation == now {
                newly_arrived.push(u.index);
                pending.push(Job {
                    index: u.index,
                    generation: u.generation.clone(),
                    remaining: u.size.clone(),
                });
                next_arrival += 1;
            } else {
                break;
            }
        }

        // Consult the policy once per timestamp.
        let state = CausalState {
            now: now.clone(),
            lambda: lambda.clone(),
            in_service: in_service
                .as_ref()
                .map(|(job, _)| (job.index, job.remaining.clone())),
            pending: pending
                .iter()
                .map(|j| (j.index, j.generation.clone(), j.remaining.clone()))
                .collect(),
            newly_arrived,
            latest_completion: latest_completion.clone(),
        };
        let decision = policy.decide(&state);

        // Apply the decision.
        match decision {
            Decision::Transmit(target) => {
                let keep = matches!(&in_service, Some((job, _)) if job.index == target);
                if !keep {
                    if let Some((job, start)) = in_service.take() {
                        segments.push(Segment {
                            update_index: job.index,
                            start,
                            end: now.clone(),
                        });
                        pending.push(job);
                    }
                    let pos = pending.iter().position(|j| j.index == target).ok_or(
                        EngineError::PolicyProtocolViolation {
                            update_index: target,
                            now: now.clone(),
                        },
                    )?;
                    let job = pending.swap_remove(pos);
                    in_service = Some((job, now.clone()));
                }
            }
            Decision::Idle => {
                if let Some((job, start)) = in_service.take() {
                    segments.push(Segment {
                        update_index: job.index,
                        start,
                        end: now.clone(),
                    });
                    pending.push(job);
                }
            }
        }

        // Advance to the next event.
        let arrival_time = instance
            .updates()
            .get(next_arrival)
            .map(|u| u.generation.clone());
        let completion_time = in_service
            .as_ref()
            .map(|(job, _)| &now + &job.remaining);
        let mut next = horizon.clone();
        if let Some(t) = &arrival_time {
            if *t < next {
                next = t.clone();
            }
        }
        let completing = match &completion_time {
            Some(t) if *t <= next => {
                next = t.clone();
                true
            }
            _ => false,
        };

        if completing {
            // Service completes exactly at `next`.
            let (job, start) = in_service.take().unwrap();
            segments.push(Segment {
                update_index: job.index,
                start,
                end: next.clone(),
            });
            completions.push((job.index, next.clone()));
            if job.generation > lambda {
                lambda = job.generation.clone();
            }
            let key = (job.generation.clone(), job.index);
            if latest_completion.as_ref().map_or(true, |c| *c < key) {
                latest_completion = Some(key);
            }
        } else if let Some((job, _)) = &mut in_service {
            job.remaining = &job.remaining - &(&next - &now);
        }

        if next == horizon {
            // Truncate in-progress work silently.
            if let Some((job, start)) = in_service.take() {
                if start < horizon {
                    segments.push(Segment {
                        update_index: job.index,
                        start,
                        end: horizon.clone(),
                    });
                }
            }
            break;
        }
        now = next;
    }

    Ok(Trace {
        instance_id: crate::io::instance_id(instance),
        segments: merge_adjacent(segments),
        completions,
    })
}

// Contiguous service of the same update across consultations is one segment.
fn merge_adjacent(segments: Vec<Segment>) -> Vec<Segment> {
    let mut out: Vec<Segment> = Vec::with_capacity(segments.len());
    for seg in segments {
        if seg.start == seg.end {
            continue;
        }
        match out.last_mut() {
            Some(prev) if prev.update_index == seg.update_index && prev.end == seg.start => {
                prev.end = seg.end;
            }
            _ => out.push(seg),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{validate_instance, validate_trace};
    use crate::policies::{policy_for, PolicyId};
    use crate::ratio::rat;

    fn example3() -> Instance {
        crate::generators::example3()
    }

    #[test]
    fn srpt_plus_example3_segments() {
        let inst = example3();
        let trace = simulate(&inst, policy_for(PolicyId::SrptPlus).as_ref()).unwrap();
        let segs: Vec<(usize, Ratio, Ratio)> = trace
            .segments
            .iter()
            .map(|s| (s.update_index, s.start.clone(), s.end.clone()))
            .collect();
        assert_eq!(
            segs,
            vec![
                (2, rat("1/4"), rat("1")),
                (4, rat("1"), rat("3/2")),
                (5, rat("3/2"), rat("9/5")),
                (6, rat("9/5"), rat("19/10")),
            ]
        );
        assert_eq!(
            trace.completions,
            vec![(4, rat("3/2")), (5, rat("9/5")), (6, rat("19/10"))]
        );
    }

    #[test]
    fn srpt_l_example3_segments() {
        let inst = example3();
        let trace = simulate(&inst, policy_for(PolicyId::SrptL).as_ref()).unwrap();
        let segs: Vec<(usize, Ratio, Ratio)> = trace
            .segments
            .iter()
            .map(|s| (s.update_index, s.start.clone(), s.end.clone()))
            .collect();
        assert_eq!(
            segs,
            vec![
                (1, rat("0"), rat("29/20")),
                (5, rat("29/20"), rat("7/4")),
                (6, rat("9/5"), rat("19/10")),
            ]
        );
        assert_eq!(
            trace.completions,
            vec![(1, rat("29/20")), (5, rat("7/4")), (6, rat("19/10"))]
        );
    }

    #[test]
    fn empty_instance_empty_trace() {
        let inst = validate_instance(vec![], rat("1"), rat("0")).unwrap();
        for id in PolicyId::ALL {
            let trace = simulate(&inst, policy_for(id).as_ref()).unwrap();
            assert!(trace.segments.is_empty());
            assert!(trace.completions.is_empty());
        }
    }

    #[test]
    fn determinism_and_validity() {
        let inst = example3();
        for id in PolicyId::ALL {
            let policy = policy_for(id);
            let a = simulate(&inst, policy.as_ref()).unwrap();
            let b = simulate(&inst, policy.as_ref()).unwrap();
            assert_eq!(a, b);
            let (ok, violations) = validate_trace(&a, &inst);
            assert!(ok, "{id:?}: {violations:?}");
        }
    }

    #[test]
    fn causality_future_updates_do_not_matter() {
        // Same prefix before t = 1, different futures.
        let base = vec![(rat("0"), rat("1/2")), (rat("1/4"), rat("1/4"))];
        let mut alt = base.clone();
        alt.push((rat("3/2"), rat("1/10")));
        let a = validate_instance(base, rat("2"), rat("0")).unwrap();
        let b = validate_instance(alt, rat("2"), rat("0")).unwrap();
        for id in PolicyId::ALL {
            let policy = policy_for(id);
            let ta = simulate(&a, policy.as_ref()).unwrap();
            let tb = simulate(&b, policy.as_ref()).unwrap();
            let cut = rat("3/2");
            let restrict = |t: &Trace| -> Vec<Segment> {
                t.segments
                    .iter()
                    .filter(|s| s.start < cut)
                    .map(|s| Segment {
                        update_index: s.update_index,
                        start: s.start.clone(),
                        end: s.end.clone().min(cut.clone()),
                    })
                    .collect()
            };
            assert_eq!(restrict(&ta), restrict(&tb), "{id:?}");
        }
    }

    #[test]
    fn horizon_truncates_in_progress_segment() {
        let inst = validate_instance(vec![(rat("0"), rat("5"))], rat("2"), rat("0")).unwrap();
        let trace = simulate(&inst, policy_for(PolicyId::Fcfs).as_ref()).unwrap();
        assert_eq!(trace.completions, vec![]);
        assert_eq!(trace.segments.len(), 1);
        assert_eq!(trace.segments[0].end, rat("2"));
    }
}
