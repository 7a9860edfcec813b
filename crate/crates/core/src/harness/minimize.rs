//! Greedy trace minimization against a reproducible violation.

use crate::harness::run::{state_digest, Trace, TraceStep};
use crate::harness::scenario::Scenario;
use crate::invariant::{check_invariant, is_fault_tolerant, InvariantId};
use crate::transition::{event_next, event_possible};
use crate::types::{Event, SystemState};

/// Result of a minimization attempt.
#[derive(Clone, Debug)]
pub struct MinimizeOutcome {
    pub trace: Trace,
    /// False when the violation did not reproduce on the input trace, in
    /// which case the trace is returned unchanged.
    pub reproduced: bool,
}

/// Runs the events as an execution; `None` if some event is disabled along
/// the way.
fn final_state(scenario: &Scenario, events: &[Event]) -> Option<SystemState> {
    let params = scenario.params();
    let mut state = scenario.initial_state();
    for e in events {
        event_possible(e, &state, &params).ok()?;
        state = event_next(e, &state, &params);
    }
    Some(state)
}

fn exhibits(scenario: &Scenario, events: &[Event], invariant: InvariantId) -> bool {
    match final_state(scenario, events) {
        Some(state) => !check_invariant(invariant, &state, &scenario.params()).is_empty(),
        None => false,
    }
}

/// Shrinks the trace by greedy event deletion: repeatedly drops events whose
/// removal keeps the remainder a valid execution that still violates
/// `invariant` on its final state. The result replays deterministically and
/// still exhibits the violation.
pub fn minimize(trace: &Trace, invariant: InvariantId) -> MinimizeOutcome {
    let mut events = trace.events();
    if !exhibits(&trace.scenario, &events, invariant) {
        return MinimizeOutcome {
            trace: trace.clone(),
            reproduced: false,
        };
    }
    loop {
        let mut changed = false;
        // Delete from the end so indices stay valid within a pass.
        let mut i = events.len();
        while i > 0 {
            i -= 1;
            let mut candidate = events.clone();
            candidate.remove(i);
            if exhibits(&trace.scenario, &candidate, invariant) {
                events = candidate;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    MinimizeOutcome {
        trace: rebuild(&trace.scenario, &events),
        reproduced: true,
    }
}

/// Recomputes a full trace (digests, fault-tolerance flags, anchor records)
/// for a fixed event list known to be a valid execution.
pub fn rebuild(scenario: &Scenario, events: &[Event]) -> Trace {
    let params = scenario.params();
    let mut state = scenario.initial_state();
    let mut ft_throughout = is_fault_tolerant(&state, &params);
    let mut steps = Vec::with_capacity(events.len());
    for e in events {
        let pre_last = match e {
            Event::Commit(a) => state.validators.get(a).map(|v| v.last),
            _ => None,
        };
        debug_assert!(event_possible(e, &state, &params).is_ok());
        state = event_next(e, &state, &params);
        let ft = is_fault_tolerant(&state, &params);
        ft_throughout &= ft;
        let anchors = match e {
            Event::Commit(a) => {
                let v = &state.validators[a];
                let all = crate::anchor::collect_all_anchors(v, &params);
                let cutoff = pre_last.unwrap_or(0);
                Some(
                    all.into_iter()
                        .filter(|c| c.round > cutoff)
                        .map(|c| (c.author.clone(), c.round))
                        .collect(),
                )
            }
            _ => None,
        };
        steps.push(TraceStep {
            event: e.clone(),
            digest: state_digest(&state),
            ft,
            anchors,
        });
    }
    Trace {
        scenario: scenario.clone(),
        steps,
        final_state: state,
        ft_throughout,
    }
}
