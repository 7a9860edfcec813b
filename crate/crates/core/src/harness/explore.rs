//! Bounded exhaustive exploration of the generated event family.
//!
//! Breadth-first over states, deduplicating by state digest (keyed together
//! with the tracked fault-tolerance flag, since the conditional invariants
//! apply only to states reached through fault-tolerant executions). Levels
//! are expanded in parallel but merged in deterministic order, so visited
//! counts do not depend on thread scheduling.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::harness::generate::enabled_events;
use crate::harness::run::state_digest;
use crate::harness::scenario::Scenario;
use crate::invariant::{check_all, is_fault_tolerant, Violation};
use crate::transition::event_next;
use crate::types::{Event, SystemState};

/// A violation found during exploration, with the event path that reaches
/// the violating state from the initial one.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathViolation {
    pub path: Vec<Event>,
    pub violation: Violation,
    /// Whether the path stayed fault-tolerant, i.e. whether the violation is
    /// a genuine failure rather than a permitted one.
    pub ft_path: bool,
}

/// Outcome of a bounded exploration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExplorationReport {
    pub visited: usize,
    pub frontier: usize,
    pub depth_reached: usize,
    pub truncated: bool,
    /// Failures (on fault-tolerant paths, or of unconditional invariants).
    pub failures: Vec<PathViolation>,
    /// Violations of conditional invariants on non-fault-tolerant paths.
    pub permitted: Vec<PathViolation>,
}

struct Node {
    state: SystemState,
    path: Vec<Event>,
    ft_path: bool,
}

/// Explores every state reachable from the initial one within `depth` events
/// of the generated family, checking all invariants on each visited state.
/// `budget` caps the number of visited states; hitting it truncates the
/// report.
pub fn explore(scenario: &Scenario, depth: usize, budget: usize) -> ExplorationReport {
    let params = scenario.params();
    let initial = scenario.initial_state();
    let ft0 = is_fault_tolerant(&initial, &params);

    let mut report = ExplorationReport {
        visited: 0,
        frontier: 0,
        depth_reached: 0,
        truncated: false,
        failures: Vec::new(),
        permitted: Vec::new(),
    };
    let mut seen: BTreeSet<(String, bool)> = BTreeSet::new();
    let mut level: BTreeMap<(String, bool), Node> = BTreeMap::new();

    let key0 = (state_digest(&initial), ft0);
    seen.insert(key0.clone());
    level.insert(
        key0,
        Node {
            state: initial,
            path: Vec::new(),
            ft_path: ft0,
        },
    );

    let mut current_depth = 0;
    while !level.is_empty() {
        // Check every node of this level.
        for node in level.values() {
            report.visited += 1;
            let state_report = check_all(&node.state, &params, node.ft_path);
            for st in &state_report.statuses {
                for violation in &st.violations {
                    let pv = PathViolation {
                        path: node.path.clone(),
                        violation: violation.clone(),
                        ft_path: node.ft_path,
                    };
                    if st.severity == crate::invariant::Severity::Failure {
                        report.failures.push(pv);
                    } else {
                        report.permitted.push(pv);
                    }
                }
            }
        }
        report.depth_reached = current_depth;
        if current_depth == depth {
            report.frontier = 0;
            break;
        }
        if report.visited >= budget {
            report.truncated = true;
            report.frontier = level.len();
            break;
        }

        // Expand the level: successor lists per node, computed in parallel,
        // merged in the level's deterministic iteration order.
        let nodes: Vec<&Node> = level.values().collect();
        let expand = |node: &&Node| -> Vec<(String, Node)> {
            enabled_events(&node.state, scenario)
                .into_iter()
                .map(|event| {
                    let next = event_next(&event, &node.state, &params);
                    let ft = node.ft_path && is_fault_tolerant(&next, &params);
                    let digest = state_digest(&next);
                    let mut path = node.path.clone();
                    path.push(event);
                    (
                        digest,
                        Node {
                            state: next,
                            path,
                            ft_path: ft,
                        },
                    )
                })
                .collect()
        };
        #[cfg(feature = "parallel")]
        let successor_lists: Vec<Vec<(String, Node)>> = {
            use rayon::prelude::*;
            nodes.par_iter().map(expand).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let successor_lists: Vec<Vec<(String, Node)>> = nodes.iter().map(expand).collect();

        let mut next_level: BTreeMap<(String, bool), Node> = BTreeMap::new();
        for list in successor_lists {
            for (digest, node) in list {
                let key = (digest, node.ft_path);
                if seen.insert(key.clone()) {
                    next_level.insert(key, node);
                }
            }
        }
        level = next_level;
        current_depth += 1;
    }
    report
}
