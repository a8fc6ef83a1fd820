//! The causal scheduling policies and baselines.
//!
//! Each policy is a pure function of [`CausalState`]. Ties everywhere
//! are broken by the fixed chain: maximize the policy's key, then
//! latest generation, then smallest remaining size, then lowest index.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::engine::{CausalState, Decision, Policy};
use crate::ratio::Ratio;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyId {
    SrptPlus,
    SrptL,
    Srpt,
    Fcfs,
    NonPreemptiveLatest,
}

impl PolicyId {
    pub const ALL: [PolicyId; 5] = [
        PolicyId::SrptPlus,
        PolicyId::SrptL,
        PolicyId::Srpt,
        PolicyId::Fcfs,
        PolicyId::NonPreemptiveLatest,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            PolicyId::SrptPlus => "srpt-plus",
            PolicyId::SrptL => "srpt-l",
            PolicyId::Srpt => "srpt",
            PolicyId::Fcfs => "fcfs",
            PolicyId::NonPreemptiveLatest => "non-preemptive-latest",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown policy {0:?}; valid: srpt-plus, srpt-l, srpt, fcfs, non-preemptive-latest")]
pub struct UnknownPolicy(pub String);

impl FromStr for PolicyId {
    type Err = UnknownPolicy;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "srpt-plus" => Ok(PolicyId::SrptPlus),
            "srpt-l" => Ok(PolicyId::SrptL),
            "srpt" => Ok(PolicyId::Srpt),
            "fcfs" => Ok(PolicyId::Fcfs),
            "non-preemptive-latest" => Ok(PolicyId::NonPreemptiveLatest),
            other => Err(UnknownPolicy(other.to_string())),
        }
    }
}

/// Returns the decision function for `id`.
pub fn policy_for(id: PolicyId) -> Box<dyn Policy + Send + Sync> {
    match id {
        PolicyId::SrptPlus => Box::new(SrptPlus),
        PolicyId::SrptL => Box::new(SrptL),
        PolicyId::Srpt => Box::new(Srpt),
        PolicyId::Fcfs => Box::new(Fcfs),
        PolicyId::NonPreemptiveLatest => Box::new(NonPreemptiveLatest),
    }
}

/// Benefit-per-remaining-time index: max(g − λ, 0) / remaining.
pub fn gamma_index(generation: &Ratio, remaining: &Ratio, lambda: &Ratio) -> Ratio {
    assert!(remaining.is_positive());
    let gain = generation - lambda;
    if gain.is_positive() {
        &gain / remaining
    } else {
        Ratio::zero()
    }
}

/// Picks the best of `candidates` under `key`, applying the shared
/// tie-break chain after the key.
fn argmax_by_key<'a, F>(
    candidates: impl Iterator<Item = &'a (usize, Ratio, Ratio)>,
    key: F,
) -> Option<usize>
where
    F: Fn(&(usize, Ratio, Ratio)) -> Ratio,
{
    let mut best: Option<((usize, &Ratio, &Ratio), Ratio)> = None;
    for c in candidates {
        let k = key(c);
        let better = match &best {
            None => true,
            Some(((bi, bg, br), bk)) => {
                (k.clone(), &c.1, std::cmp::Reverse(&c.2), std::cmp::Reverse(c.0))
                    > (bk.clone(), bg, std::cmp::Reverse(br), std::cmp::Reverse(*bi))
            }
        };
        if better {
            best = Some(((c.0, &c.1, &c.2), k));
        }
    }
    best.map(|((i, _, _), _)| i)
}

/// Shared preemption rule: among updates generated at `now` with size
/// no larger than the remaining size in service, pick the winner by
/// `key` and the tie-break chain.
fn preemption_winner<F>(state: &CausalState, key: F) -> Option<usize>
where
    F: Fn(&(usize, Ratio, Ratio)) -> Ratio,
{
    let (_, remaining) = state.in_service.as_ref()?;
    argmax_by_key(
        state
            .pending
            .iter()
            .filter(|(i, _, r)| state.newly_arrived.contains(i) && r <= remaining),
        key,
    )
}

/// SRPT-style preemption plus greedy index selection when idle.
pub struct SrptPlus;

impl Policy for SrptPlus {
    fn name(&self) -> &'static str {
        PolicyId::SrptPlus.name()
    }

    fn decide(&self, state: &CausalState) -> Decision {
        srpt_plus_decide(state)
    }
}

pub fn srpt_plus_decide(state: &CausalState) -> Decision {
    let gamma = |c: &(usize, Ratio, Ratio)| gamma_index(&c.1, &c.2, &state.lambda);
    if let Some((current, _)) = &state.in_service {
        return match preemption_winner(state, gamma) {
            Some(winner) => Decision::Transmit(winner),
            None => Decision::Transmit(*current),
        };
    }
    let in_gamma_set = state
        .pending
        .iter()
        .filter(|c| gamma(c).is_positive());
    match argmax_by_key(in_gamma_set, gamma) {
        Some(i) => Decision::Transmit(i),
        None => Decision::Idle,
    }
}

/// Same preemption rule; when idle, serves the latest generated update
/// unconditionally (idles if that update is already done).
pub struct SrptL;

impl Policy for SrptL {
    fn name(&self) -> &'static str {
        PolicyId::SrptL.name()
    }

    fn decide(&self, state: &CausalState) -> Decision {
        srpt_l_decide(state)
    }
}

pub fn srpt_l_decide(state: &CausalState) -> Decision {
    if let Some((current, _)) = &state.in_service {
        let by_generation = |c: &(usize, Ratio, Ratio)| c.1.clone();
        return match preemption_winner(state, by_generation) {
            Some(winner) => Decision::Transmit(winner),
            None => Decision::Transmit(*current),
        };
    }
    // Latest generated update overall, by (generation, index).
    let latest_pending = state
        .pending
        .iter()
        .max_by(|a, b| (&a.1, a.0).cmp(&(&b.1, b.0)));
    match latest_pending {
        Some((i, g, _)) => {
            let done_is_later = state
                .latest_completion
                .as_ref()
                .is_some_and(|(cg, ci)| (cg, ci) > (g, i));
            if done_is_later {
                Decision::Idle
            } else {
                Decision::Transmit(*i)
            }
        }
        None => Decision::Idle,
    }
}

/// Classic shortest-remaining-processing-time; never idles while work
/// exists, switches freely at event instants.
pub struct Srpt;

impl Policy for Srpt {
    fn name(&self) -> &'static str {
        PolicyId::Srpt.name()
    }

    fn decide(&self, state: &CausalState) -> Decision {
        srpt_decide(state)
    }
}

pub fn srpt_decide(state: &CausalState) -> Decision {
    // Pending candidate with the least remaining size (ties: latest
    // generation, then lowest index). Exact remaining ties against the
    // update in service keep the service running.
    let neg_remaining = |c: &(usize, Ratio, Ratio)| -c.2.clone();
    let best_pending = argmax_by_key(state.pending.iter(), neg_remaining);
    match (&state.in_service, best_pending) {
        (Some((current, remaining)), Some(p)) => {
            let p_rem = &state.pending.iter().find(|c| c.0 == p).unwrap().2;
            if p_rem < remaining {
                Decision::Transmit(p)
            } else {
                Decision::Transmit(*current)
            }
        }
        (Some((current, _)), None) => Decision::Transmit(*current),
        (None, Some(p)) => Decision::Transmit(p),
        (None, None) => Decision::Idle,
    }
}

/// First-come-first-serve, non-preemptive.
pub struct Fcfs;

impl Policy for Fcfs {
    fn name(&self) -> &'static str {
        PolicyId::Fcfs.name()
    }

    fn decide(&self, state: &CausalState) -> Decision {
        fcfs_decide(state)
    }
}

pub fn fcfs_decide(state: &CausalState) -> Decision {
    if let Some((current, _)) = &state.in_service {
        return Decision::Transmit(*current);
    }
    match state.pending.iter().map(|(i, _, _)| *i).min() {
        Some(i) => Decision::Transmit(i),
        None => Decision::Idle,
    }
}

/// Serves the latest-generation incomplete update when idle; never
/// preempts. Unlike SRPT^L it reaches back to older incomplete updates.
pub struct NonPreemptiveLatest;

impl Policy for NonPreemptiveLatest {
    fn name(&self) -> &'static str {
        PolicyId::NonPreemptiveLatest.name()
    }

    fn decide(&self, state: &CausalState) -> Decision {
        non_preemptive_latest_decide(state)
    }
}

pub fn non_preemptive_latest_decide(state: &CausalState) -> Decision {
    if let Some((current, _)) = &state.in_service {
        return Decision::Transmit(*current);
    }
    let by_generation = |c: &(usize, Ratio, Ratio)| c.1.clone();
    match argmax_by_key(state.pending.iter(), by_generation) {
        Some(i) => Decision::Transmit(i),
        None => Decision::Idle,
    }
}
