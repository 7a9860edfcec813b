//! DAG queries: edges, paths, causal histories, and the closure and newness
//! checks used by the transition rules.
//!
//! Edges point backwards: from a certificate at round r to the referenced
//! certificates at round r-1. Paths follow zero or more edges, so a
//! certificate reaches itself exactly when it is in the DAG.

use std::collections::{BTreeSet, VecDeque};

use crate::types::{Address, Certificate, Dag, Round, ValidatorState};

/// Whether there is an edge from `c` down to `c2`: both in the DAG, `c` one
/// round later, and `c2`'s author referenced by `c`.
pub fn is_edge(c: &Certificate, c2: &Certificate, dag: &Dag) -> bool {
    dag.contains(c)
        && dag.contains(c2)
        && c.round == c2.round + 1
        && c.previous.contains(&c2.author)
}

/// Whether a chain of zero or more edges leads from `c` down to `c2`.
pub fn has_path(c: &Certificate, c2: &Certificate, dag: &Dag) -> bool {
    if !dag.contains(c) || !dag.contains(c2) {
        return false;
    }
    if c == c2 {
        return true;
    }
    if c2.round >= c.round {
        return false;
    }
    // Backward BFS from c, pruned below c2's round.
    let mut seen: BTreeSet<&Certificate> = BTreeSet::new();
    let mut queue: VecDeque<&Certificate> = VecDeque::new();
    queue.push_back(c);
    while let Some(cur) = queue.pop_front() {
        if cur.round <= c2.round {
            continue;
        }
        for p in &cur.previous {
            for prev in dag.certs_with_author_round(p, cur.round - 1) {
                if prev == c2 {
                    return true;
                }
                if seen.insert(prev) {
                    queue.push_back(prev);
                }
            }
        }
    }
    false
}

/// All certificates reachable from `c` via paths, including `c` itself.
///
/// `c` must be in the DAG.
pub fn causal_history(c: &Certificate, dag: &Dag) -> BTreeSet<Certificate> {
    assert!(dag.contains(c), "causal_history: certificate not in dag");
    let mut history: BTreeSet<Certificate> = BTreeSet::new();
    let mut queue: VecDeque<&Certificate> = VecDeque::new();
    history.insert(c.clone());
    queue.push_back(c);
    while let Some(cur) = queue.pop_front() {
        if cur.round == 1 {
            continue;
        }
        for p in &cur.previous {
            for prev in dag.certs_with_author_round(p, cur.round - 1) {
                if history.insert(prev.clone()) {
                    queue.push_back(prev);
                }
            }
        }
    }
    history
}

/// Whether every address in `prevs` has a certificate at round `round` in the
/// DAG (no dangling edges for a certificate referencing `prevs`).
pub fn is_closed(prevs: &BTreeSet<Address>, round: Round, dag: &Dag) -> bool {
    prevs
        .iter()
        .all(|p| !dag.certs_with_author_round(p, round).is_empty())
}

/// Whether `(author, round)` is new to validator state `v`: no certificate
/// with that author and round in its DAG, and no endorsed pair for it.
pub fn is_new(author: &Address, round: Round, v: &ValidatorState) -> bool {
    v.dag.certs_with_author_round(author, round).is_empty()
        && !v
            .endorsed
            .iter()
            .any(|d| d.author == *author && d.round == round)
}

/// Authors of the certificates one round after `c` that reference it (the
/// `yes` voters in an anchor election).
pub fn voters_for(c: &Certificate, dag: &Dag) -> BTreeSet<Address> {
    if !dag.contains(c) {
        return BTreeSet::new();
    }
    dag.certs_with_round(c.round + 1)
        .iter()
        .filter(|c2| c2.previous.contains(&c.author))
        .map(|c2| c2.author.clone())
        .collect()
}

/// Renders the DAG in Graphviz DOT: one node per certificate labelled
/// "author@round", one directed edge per DAG edge.
pub fn to_dot(dag: &Dag) -> String {
    let mut out = String::from("digraph dag {\n  rankdir=RL;\n");
    for c in dag.iter() {
        out.push_str(&format!("  \"{}\";\n", c.label()));
    }
    for c in dag.iter() {
        if c.round == 1 {
            continue;
        }
        for p in &c.previous {
            for c2 in dag.certs_with_author_round(p, c.round - 1) {
                out.push_str(&format!("  \"{}\" -> \"{}\";\n", c.label(), c2.label()));
            }
        }
    }
    out.push_str("}\n");
    out
}
