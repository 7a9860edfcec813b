//! Property tests for the model's algebraic laws: orders, serialization,
//! set semantics, stake arithmetic, committee monotonicity, DAG path
//! stability, and transition frame conditions.

use std::collections::BTreeSet;

use proptest::prelude::*;

use dagbft_core::anchor::{leader_at, order_certs};
use dagbft_core::committee::{
    active_committee_at, apply_blocks, bonded_committee_at, max_faulty_stake, quorum_stake,
    total_stake, ProtocolParams,
};
use dagbft_core::dag::{causal_history, has_path, is_edge};
use dagbft_core::harness::{enabled_events, run_random, Scenario};
use dagbft_core::transition::{event_next, event_possible};
use dagbft_core::types::{
    Address, Block, Blockchain, Certificate, Committee, Dag, Event, Round, Stake, SystemState,
    Transaction,
};

fn arb_address() -> impl Strategy<Value = Address> {
    "[a-z][a-z0-9]{0,6}".prop_map(Address::new)
}

fn arb_transaction() -> impl Strategy<Value = Transaction> {
    prop_oneof![
        (arb_address(), 1..100u64).prop_map(|(validator, stake)| Transaction::Bond {
            validator,
            stake
        }),
        arb_address().prop_map(|validator| Transaction::Unbond { validator }),
        "[a-z0-9]{0,8}".prop_map(|payload| Transaction::Other { payload }),
    ]
}

fn arb_certificate() -> impl Strategy<Value = Certificate> {
    (
        arb_address(),
        1..6u64,
        proptest::collection::vec(arb_transaction(), 0..3),
        proptest::collection::btree_set(arb_address(), 0..4),
        proptest::collection::btree_set(arb_address(), 0..4),
    )
        .prop_map(|(author, round, transactions, previous, endorsers)| Certificate {
            author,
            round,
            transactions,
            previous,
            endorsers,
        })
}

fn arb_committee() -> impl Strategy<Value = Committee> {
    proptest::collection::btree_map(arb_address(), 1..50u64, 1..6)
        .prop_map(Committee::new)
}

/// A committee-changing chain with strictly increasing even rounds.
fn arb_chain() -> impl Strategy<Value = Blockchain> {
    proptest::collection::vec(
        (proptest::collection::vec(arb_transaction(), 0..3), 1..4u64),
        0..5,
    )
    .prop_map(|specs| {
        let mut round = 0;
        let blocks = specs
            .into_iter()
            .map(|(transactions, gap)| {
                round += 2 * gap;
                Block {
                    round,
                    transactions,
                }
            })
            .collect();
        Blockchain::new(blocks)
    })
}

/// Backward-closed layered DAG: every certificate at round r > 1 references
/// only authors present at round r-1.
fn arb_closed_dag() -> impl Strategy<Value = Dag> {
    (
        proptest::collection::btree_set(arb_address(), 1..5),
        1..5usize,
        any::<u64>(),
    )
        .prop_map(|(authors, rounds, seed)| {
            let authors: Vec<Address> = authors.into_iter().collect();
            let mut dag = Dag::new();
            let mut prev_layer: Vec<Address> = Vec::new();
            let mut mix = seed;
            let mut next = || {
                mix = dagbft_core::anchor::mix64(mix);
                mix
            };
            for round in 1..=rounds as Round {
                let mut layer = Vec::new();
                for a in &authors {
                    if round > 1 && prev_layer.is_empty() {
                        break;
                    }
                    if next() % 4 == 0 && round > 1 {
                        continue; // leave gaps
                    }
                    let previous: BTreeSet<Address> = if round == 1 {
                        BTreeSet::new()
                    } else {
                        prev_layer
                            .iter()
                            .filter(|_| next() % 3 != 0)
                            .cloned()
                            .chain(prev_layer.first().cloned())
                            .collect()
                    };
                    dag.insert(Certificate {
                        author: a.clone(),
                        round,
                        transactions: vec![],
                        previous,
                        endorsers: BTreeSet::new(),
                    });
                    layer.push(a.clone());
                }
                if layer.is_empty() {
                    break;
                }
                prev_layer = layer;
            }
            dag
        })
}

/// Exhaustive reflexive-transitive closure over is_edge; the independent
/// oracle for has_path.
fn path_closure_oracle(c: &Certificate, c2: &Certificate, dag: &Dag) -> bool {
    if !dag.contains(c) || !dag.contains(c2) {
        return false;
    }
    let certs: Vec<&Certificate> = dag.iter().collect();
    let n = certs.len();
    let idx = |x: &Certificate| certs.iter().position(|y| *y == x).unwrap();
    let mut reach = vec![vec![false; n]; n];
    for (i, a) in certs.iter().enumerate() {
        reach[i][i] = true;
        for (j, b) in certs.iter().enumerate() {
            if is_edge(a, b, dag) {
                reach[i][j] = true;
            }
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                reach[i][j] = reach[i][j] || (reach[i][k] && reach[k][j]);
            }
        }
    }
    reach[idx(c)][idx(c2)]
}

proptest! {
    #[test]
    fn address_order_is_strict_and_total(a in arb_address(), b in arb_address(), c in arb_address()) {
        prop_assert!(!(a < a));
        prop_assert!(a < b || b < a || a == b);
        if a < b && b < c {
            prop_assert!(a < c);
        }
    }

    #[test]
    fn serde_round_trips_core_types(cert in arb_certificate(), w in arb_committee(), chain in arb_chain()) {
        let json = serde_json::to_string(&cert).unwrap();
        prop_assert_eq!(&serde_json::from_str::<Certificate>(&json).unwrap(), &cert);
        let json = serde_json::to_string(&w).unwrap();
        prop_assert_eq!(&serde_json::from_str::<Committee>(&json).unwrap(), &w);
        let json = serde_json::to_string(&chain).unwrap();
        prop_assert_eq!(&serde_json::from_str::<Blockchain>(&json).unwrap(), &chain);
        let dag: Dag = [cert].into_iter().collect();
        let json = serde_json::to_string(&dag).unwrap();
        prop_assert_eq!(&serde_json::from_str::<Dag>(&json).unwrap(), &dag);
    }

    #[test]
    fn dag_double_insert_is_identity(certs in proptest::collection::vec(arb_certificate(), 0..8)) {
        let once: Dag = certs.iter().cloned().collect();
        let twice: Dag = certs.iter().cloned().chain(certs.iter().cloned()).collect();
        prop_assert_eq!(once, twice);
    }

    /// The three characterizations of the maximum faulty stake agree, and
    /// the quorum threshold dominates it with the intersection margin.
    #[test]
    fn stake_threshold_laws(w in arb_committee()) {
        let n = total_stake(&w);
        let f = max_faulty_stake(&w);
        if n == 0 {
            prop_assert_eq!(f, 0);
        } else {
            prop_assert_eq!(f, (n + 2) / 3 - 1); // ceil(n/3) - 1
            prop_assert_eq!(f, (n - 1) / 3);
            prop_assert!(3 * f <= n - 1);
            prop_assert!(3 * (f + 1) >= n);
        }
        let q = quorum_stake(&w);
        prop_assert_eq!(q + f, n);
        if n > 0 {
            prop_assert!(q > 2 * f);
        }
    }

    /// Extending a chain never changes a committee that was already
    /// calculable from the shorter chain.
    #[test]
    fn committee_calculation_is_monotonic(
        gcmt in arb_committee(),
        chain in arb_chain(),
        extra in proptest::collection::vec(arb_transaction(), 0..3),
        lookback in 1..6u64,
    ) {
        let params = ProtocolParams::new(gcmt, lookback);
        let mut extended = chain.clone();
        let next_round = chain.blocks.last().map_or(2, |b| b.round + 2);
        extended.blocks.push(Block { round: next_round, transactions: extra });
        let horizon = chain.blocks.last().map_or(2, |b| b.round + 2);
        for r in 1..=horizon {
            let before = bonded_committee_at(r, &chain, &params);
            prop_assert!(before.is_some());
            prop_assert_eq!(&before, &bonded_committee_at(r, &extended, &params));
            if let Some(active) = active_committee_at(r, &chain, &params) {
                prop_assert_eq!(Some(active), active_committee_at(r, &extended, &params));
            }
        }
        // The genesis committee is active through lookback + 2 whenever the
        // earliest block round is at least 2.
        for r in 1..=params.lookback + 2 {
            prop_assert_eq!(
                active_committee_at(r, &chain, &params),
                Some(params.genesis_committee.clone())
            );
        }
    }

    #[test]
    fn apply_blocks_composes(w in arb_committee(), chain in arb_chain(), split in 0..6usize) {
        let split = split.min(chain.blocks.len());
        let (left, right) = chain.blocks.split_at(split);
        prop_assert_eq!(
            apply_blocks(&w, &chain.blocks),
            apply_blocks(&apply_blocks(&w, left), right)
        );
    }

    /// Paths agree with the brute-force closure, and inserting a fresh
    /// certificate never changes paths or causal histories between existing
    /// ones.
    #[test]
    fn path_queries_are_stable_under_insertion(dag in arb_closed_dag(), newcomer in arb_address()) {
        let certs: Vec<Certificate> = dag.iter().cloned().collect();
        for a in &certs {
            for b in &certs {
                prop_assert_eq!(has_path(a, b, &dag), path_closure_oracle(a, b, &dag));
                if is_edge(a, b, &dag) {
                    prop_assert!(has_path(a, b, &dag));
                }
            }
        }
        // Insert a certificate one round above the top, referencing every
        // author of the top layer; paths between existing members and their
        // histories must be unchanged.
        let top = certs.iter().map(|c| c.round).max().unwrap_or(1);
        let top_layer: BTreeSet<Address> = certs
            .iter()
            .filter(|c| c.round == top)
            .map(|c| c.author.clone())
            .collect();
        let fresh = Certificate {
            author: newcomer,
            round: top + 1,
            transactions: vec![],
            previous: top_layer,
            endorsers: BTreeSet::new(),
        };
        if !dag.contains(&fresh) {
            let mut extended = dag.clone();
            extended.insert(fresh);
            for a in &certs {
                prop_assert_eq!(&causal_history(a, &dag), &causal_history(a, &extended));
                for b in &certs {
                    prop_assert_eq!(has_path(a, b, &dag), has_path(a, b, &extended));
                }
            }
        }
    }

    /// order_certs is a deterministic permutation without repetitions,
    /// verified against the brute-force definition on small sets.
    #[test]
    fn ordering_is_a_permutation(certs in proptest::collection::btree_set(arb_certificate(), 0..10)) {
        let ordered = order_certs(&certs);
        prop_assert_eq!(ordered.len(), certs.len());
        let back: BTreeSet<Certificate> = ordered.iter().cloned().collect();
        prop_assert_eq!(&back, &certs);
        for pair in ordered.windows(2) {
            prop_assert!(pair[0] < pair[1]);
            prop_assert!(
                pair[0].round < pair[1].round
                    || (pair[0].round == pair[1].round && pair[0].author <= pair[1].author)
            );
        }
    }

    #[test]
    fn leader_is_a_member_for_random_committees(w in arb_committee(), r in 1..1000u64) {
        prop_assert!(w.contains(&leader_at(&w, r)));
    }
}

/// Frame conditions along a real execution: each event kind touches exactly
/// the state components its rule mentions.
#[test]
fn transition_frame_conditions() {
    let mut scenario = Scenario::equal_stake(&["v1", "v2", "v3", "v4"], 4);
    scenario.seed = 17;
    scenario.max_events = 150;
    scenario.dynamic_stake.bond_percent = 10;
    let params = scenario.params();
    let mut state = scenario.initial_state();
    let correct: BTreeSet<Address> = state.validators.keys().cloned().collect();
    for _ in 0..scenario.max_events {
        let events: Vec<Event> = enabled_events(&state, &scenario).into_iter().collect();
        if events.is_empty() {
            break;
        }
        for event in &events {
            assert!(event_possible(event, &state, &params).is_ok());
            let next = event_next(event, &state, &params);
            let next_correct: BTreeSet<Address> = next.validators.keys().cloned().collect();
            assert_eq!(correct, next_correct, "validator domain changed");
            match event {
                Event::Advance(a) => {
                    assert_eq!(next.network, state.network);
                    for (addr, v) in &state.validators {
                        let nv = &next.validators[addr];
                        if addr == a {
                            assert_eq!(nv.round, v.round + 1);
                            let mut rolled = nv.clone();
                            rolled.round = v.round;
                            assert_eq!(&rolled, v);
                        } else {
                            assert_eq!(nv, v);
                        }
                    }
                }
                Event::Accept(m) => {
                    assert_eq!(next.network.len() + 1, state.network.len());
                    assert!(!next.network.contains(m));
                    for (addr, v) in &state.validators {
                        if addr != &m.destination {
                            assert_eq!(&next.validators[addr], v);
                        }
                    }
                }
                Event::Commit(a) => {
                    assert_eq!(next.network, state.network);
                    for (addr, v) in &state.validators {
                        let nv = &next.validators[addr];
                        if addr == a {
                            assert_eq!(nv.round, v.round);
                            assert_eq!(nv.dag, v.dag);
                            assert_eq!(nv.endorsed, v.endorsed);
                            assert!(nv.last > v.last);
                            assert!(nv.blockchain.len() > v.blockchain.len());
                        } else {
                            assert_eq!(nv, v);
                        }
                    }
                }
                Event::Create(_) => {}
            }
        }
        // Walk one random-ish but deterministic step.
        let pick = (dagbft_core::anchor::mix64(state.network.len() as u64
            + state.validators.values().map(|v| v.round).sum::<u64>())
            % events.len() as u64) as usize;
        state = event_next(&events[pick], &state, &params);
    }
}

/// Validator rounds never decrease along any execution.
#[test]
fn rounds_are_monotonic_along_runs() {
    for seed in 0..5u64 {
        let mut scenario = Scenario::equal_stake(&["v1", "v2", "v3"], 2);
        scenario.seed = seed;
        scenario.max_events = 120;
        let trace = run_random(&scenario);
        let params = scenario.params();
        let mut state = scenario.initial_state();
        let mut rounds: Vec<u64> = state.validators.values().map(|v| v.round).collect();
        for step in &trace.steps {
            state = event_next(&step.event, &state, &params);
            let new_rounds: Vec<u64> = state.validators.values().map(|v| v.round).collect();
            for (old, new) in rounds.iter().zip(&new_rounds) {
                assert!(new >= old);
            }
            rounds = new_rounds;
        }
    }
}

/// Every event emitted by the generator satisfies the transition rules, on
/// states sampled along random executions (including adversarial ones).
#[test]
fn generated_events_are_always_enabled() {
    let mut scenario = Scenario::equal_stake(&["v1", "v2", "v3"], 2);
    scenario.genesis_committee.insert("f4".into(), 1);
    scenario.faulty_validators.insert("f4".into());
    scenario.adversary = dagbft_core::harness::AdversaryStrategy::Equivocate;
    scenario.seed = 23;
    scenario.max_events = 100;
    let params = scenario.params();
    let trace = run_random(&scenario);
    let mut state: SystemState = scenario.initial_state();
    let mut checked = 0;
    for step in &trace.steps {
        for e in enabled_events(&state, &scenario) {
            assert!(
                event_possible(&e, &state, &params).is_ok(),
                "generator proposed disabled event {e}"
            );
            checked += 1;
        }
        state = event_next(&step.event, &state, &params);
    }
    assert!(checked > 100);
}

/// Stakes accepted by committees are positive; bonding keeps them positive.
#[test]
fn committee_entries_stay_positive() {
    let w: Committee = [(Address::from("a"), 3 as Stake)].into_iter().collect();
    let w2 = dagbft_core::committee::apply_transaction(
        &w,
        &Transaction::Bond {
            validator: "b".into(),
            stake: 1,
        },
    );
    assert!(w2.members.values().all(|&k| k >= 1));
}
