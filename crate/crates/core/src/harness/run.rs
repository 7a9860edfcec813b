//! Seeded random execution, trace recording, and deterministic replay.
//!
//! A trace pins a run completely: the scenario (seed included), every event
//! with the digest of its post-state, and the final state. Replaying from
//! the scenario must reproduce every digest bit-exactly.

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::harness::generate::enabled_events;
use crate::harness::scenario::Scenario;
use crate::invariant::is_fault_tolerant;
use crate::transition::{event_next, event_possible};
use crate::types::{Address, Event, EventKind, Round, SystemState};

/// 128-bit state digest over the canonical serialization, hex-encoded.
/// SHA-256 truncated to 16 bytes: stable across platforms and builds.
pub fn state_digest(s: &SystemState) -> String {
    let bytes = serde_json::to_vec(s).expect("state serializes");
    let hash = Sha256::digest(&bytes);
    hex::encode(&hash[..16])
}

/// One recorded step: the event, the digest of the state after it, and
/// whether that state is fault-tolerant. Commit steps also record the
/// committed anchor sequence.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceStep {
    pub event: Event,
    pub digest: String,
    pub ft: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchors: Option<Vec<(Address, Round)>>,
}

/// A full recorded execution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trace {
    pub scenario: Scenario,
    pub steps: Vec<TraceStep>,
    pub final_state: SystemState,
    /// Whether every state along the run, the initial one included, was
    /// fault-tolerant.
    pub ft_throughout: bool,
}

impl Trace {
    /// JSON-lines encoding: scenario, then one step per line, then the final
    /// state. Field order is fixed by the struct definitions, so equal
    /// traces serialize byte-identically.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        out.push_str(&serde_json::to_string(&self.scenario).expect("scenario"));
        out.push('\n');
        for step in &self.steps {
            out.push_str(&serde_json::to_string(step).expect("step"));
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&self.final_state).expect("state"));
        out.push('\n');
        out
    }

    pub fn from_jsonl(text: &str) -> Result<Self, TraceParseError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let scenario_line = lines.next().ok_or(TraceParseError::Empty)?;
        let scenario: Scenario =
            serde_json::from_str(scenario_line).map_err(TraceParseError::Scenario)?;
        let rest: Vec<&str> = lines.collect();
        let (state_line, step_lines) = rest.split_last().ok_or(TraceParseError::MissingState)?;
        let mut steps = Vec::with_capacity(step_lines.len());
        for (i, line) in step_lines.iter().enumerate() {
            steps.push(
                serde_json::from_str(line).map_err(|e| TraceParseError::Step(i, e))?,
            );
        }
        let final_state: SystemState =
            serde_json::from_str(state_line).map_err(TraceParseError::State)?;
        let ft_throughout = steps.iter().all(|s: &TraceStep| s.ft);
        Ok(Trace {
            scenario,
            steps,
            final_state,
            ft_throughout,
        })
    }

    pub fn events(&self) -> Vec<Event> {
        self.steps.iter().map(|s| s.event.clone()).collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceParseError {
    #[error("empty trace file")]
    Empty,
    #[error("trace has no final state line")]
    MissingState,
    #[error("bad scenario line: {0}")]
    Scenario(#[source] serde_json::Error),
    #[error("bad step line {0}: {1}")]
    Step(usize, #[source] serde_json::Error),
    #[error("bad final state line: {0}")]
    State(#[source] serde_json::Error),
}

/// Builds the trace step for an applied event, recording committed anchors
/// for commit events (the difference of the validator's anchor sequence is
/// visible via `last`, so the collection is recomputed on the post-state).
fn record_step(
    event: &Event,
    post: &SystemState,
    ft: bool,
    scenario: &Scenario,
    pre_last: Option<Round>,
) -> TraceStep {
    let anchors = match event {
        Event::Commit(a) => {
            let params = scenario.params();
            let v = &post.validators[a];
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
    TraceStep {
        event: event.clone(),
        digest: state_digest(post),
        ft,
        anchors,
    }
}

/// Runs the scenario to completion, invoking `observer` on every state
/// (step 0 is the initial state with no event). The run stops at
/// `max_events`, when every remaining event is an advance past `max_round`,
/// or when nothing is enabled.
pub fn run_with(
    scenario: &Scenario,
    mut observer: impl FnMut(usize, Option<&Event>, &SystemState, bool),
) -> Trace {
    let params = scenario.params();
    let mut state = scenario.initial_state();
    let mut ft = is_fault_tolerant(&state, &params);
    let mut ft_throughout = ft;
    let mut steps: Vec<TraceStep> = Vec::new();
    observer(0, None, &state, ft);

    if let Some(script) = &scenario.script {
        for (i, event) in script.iter().enumerate() {
            let pre_last = pre_commit_last(&state, event);
            event_possible(event, &state, &params)
                .unwrap_or_else(|p| panic!("scripted event {i} not enabled: {p}"));
            state = event_next(event, &state, &params);
            ft = is_fault_tolerant(&state, &params);
            ft_throughout &= ft;
            steps.push(record_step(event, &state, ft, scenario, pre_last));
            observer(i + 1, Some(event), &state, ft);
        }
        return Trace {
            scenario: scenario.clone(),
            steps,
            final_state: state,
            ft_throughout,
        };
    }

    let mut rng = ChaCha8Rng::seed_from_u64(scenario.seed);
    for i in 0..scenario.max_events {
        let events: Vec<Event> = enabled_events(&state, scenario)
            .into_iter()
            .filter(|e| match e {
                Event::Advance(a) => state.validators[a].round < scenario.max_round,
                _ => true,
            })
            .collect();
        if events.is_empty() {
            break;
        }
        let by_kind: Vec<(EventKind, Vec<&Event>)> = EventKind::ALL
            .iter()
            .map(|&k| (k, events.iter().filter(|e| e.kind() == k).collect()))
            .filter(|(_, es): &(EventKind, Vec<&Event>)| !es.is_empty())
            .collect();
        let weights: Vec<u64> = by_kind
            .iter()
            .map(|(k, _)| scenario.scheduler_weights.weight(*k) as u64)
            .collect();
        let (_, pool) = if weights.iter().all(|&w| w == 0) {
            // Only zero-weight kinds remain enabled; the run cannot proceed
            // under the configured policy.
            break;
        } else {
            let idx = WeightedIndex::new(&weights)
                .expect("non-empty positive weights")
                .sample(&mut rng);
            &by_kind[idx]
        };
        let event = pool[rng.gen_range(0..pool.len())].clone();
        let pre_last = pre_commit_last(&state, &event);
        state = event_next(&event, &state, &params);
        ft = is_fault_tolerant(&state, &params);
        ft_throughout &= ft;
        steps.push(record_step(&event, &state, ft, scenario, pre_last));
        observer(i + 1, Some(&event), &state, ft);
    }
    Trace {
        scenario: scenario.clone(),
        steps,
        final_state: state,
        ft_throughout,
    }
}

fn pre_commit_last(state: &SystemState, event: &Event) -> Option<Round> {
    match event {
        Event::Commit(a) => state.validators.get(a).map(|v| v.last),
        _ => None,
    }
}

/// A full deterministic run of the scenario.
pub fn run_random(scenario: &Scenario) -> Trace {
    run_with(scenario, |_, _, _, _| {})
}

/// Runs many scenarios, in parallel when the `parallel` feature is enabled.
pub fn run_batch(scenarios: &[Scenario]) -> Vec<Trace> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        scenarios.par_iter().map(run_random).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        run_batch_sequential(scenarios)
    }
}

/// Sequential equivalent of `run_batch`, always available for comparison.
pub fn run_batch_sequential(scenarios: &[Scenario]) -> Vec<Trace> {
    scenarios.iter().map(run_random).collect()
}

/// Where a replay diverged from its trace.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReplayMismatch {
    /// 1-based step index, 0 for a final-state mismatch.
    pub step: usize,
    pub detail: String,
}

impl std::fmt::Display for ReplayMismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "step {}: {}", self.step, self.detail)
    }
}

/// Recomputes the run from the trace's scenario and events, comparing every
/// recorded digest and the final state bit-exactly.
pub fn replay(trace: &Trace) -> Result<(), ReplayMismatch> {
    let params = trace.scenario.params();
    let mut state = trace.scenario.initial_state();
    for (i, step) in trace.steps.iter().enumerate() {
        if let Err(p) = event_possible(&step.event, &state, &params) {
            return Err(ReplayMismatch {
                step: i + 1,
                detail: format!("event {} not enabled: {p}", step.event),
            });
        }
        state = event_next(&step.event, &state, &params);
        let digest = state_digest(&state);
        if digest != step.digest {
            return Err(ReplayMismatch {
                step: i + 1,
                detail: format!("digest {digest} differs from recorded {}", step.digest),
            });
        }
        let ft = is_fault_tolerant(&state, &params);
        if ft != step.ft {
            return Err(ReplayMismatch {
                step: i + 1,
                detail: format!("fault-tolerance flag {ft} differs from recorded {}", step.ft),
            });
        }
    }
    if state != trace.final_state {
        let detail = first_state_difference(&state, &trace.final_state);
        return Err(ReplayMismatch {
            step: 0,
            detail: format!("final state differs: {detail}"),
        });
    }
    Ok(())
}

/// Names the first differing component between two states, for mismatch
/// reports.
fn first_state_difference(a: &SystemState, b: &SystemState) -> String {
    if a.network != b.network {
        return "network".to_string();
    }
    for (addr, va) in &a.validators {
        match b.validators.get(addr) {
            None => return format!("validator set ({addr} missing)"),
            Some(vb) => {
                if va.round != vb.round {
                    return format!("{addr}.round");
                }
                if va.dag != vb.dag {
                    return format!("{addr}.dag");
                }
                if va.endorsed != vb.endorsed {
                    return format!("{addr}.endorsed");
                }
                if va.last != vb.last {
                    return format!("{addr}.last");
                }
                if va.blockchain != vb.blockchain {
                    return format!("{addr}.blockchain");
                }
                if va.committed != vb.committed {
                    return format!("{addr}.committed");
                }
            }
        }
    }
    if a.validators.len() != b.validators.len() {
        return "validator set".to_string();
    }
    "identical".to_string()
}
