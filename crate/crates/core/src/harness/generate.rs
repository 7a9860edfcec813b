//! Finite event generation: a sound under-approximation of the enabled
//! events in a state, plus adversary proposals for faulty validators.
//!
//! The model quantifies certificate creation over arbitrary transaction
//! payloads; the generator makes that enumerable by proposing one concrete
//! candidate per correct validator (and a small family per faulty one),
//! derived deterministically from the scenario seed and the author's round.
//! Every emitted event is checked against the transition rules before being
//! returned, so generation can never propose a disabled event.

use std::collections::BTreeSet;

use crate::anchor::mix64;
use crate::committee::{
    active_committee_at, is_quorum, quorum_stake, ProtocolParams,
};
use crate::dag::{is_closed, is_new};
use crate::harness::scenario::{AdversaryStrategy, Scenario};
use crate::transition::{commit_possible, create_possible, event_possible};
use crate::types::{
    Address, Certificate, Committee, Event, Round, SystemState, Transaction, ValidatorState,
};

/// Stable 64-bit digest of an address, for deterministic per-author choices.
fn addr_seed(a: &Address) -> u64 {
    a.as_str()
        .bytes()
        .fold(0xcbf2_9ce4_8422_2325u64, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
}

fn choice(seed: u64, a: &Address, round: Round, salt: u64) -> u64 {
    mix64(seed ^ addr_seed(a).rotate_left(17) ^ round.wrapping_mul(0x9e37) ^ salt)
}

/// The transaction batch a validator proposes at a round: one opaque payload
/// unique to (author, round), optionally preceded by a bond or unbond of a
/// correct validator according to the scenario's dynamic-stake policy.
pub fn transaction_batch(scenario: &Scenario, author: &Address, round: Round) -> Vec<Transaction> {
    let mut batch = Vec::with_capacity(2);
    let policy = scenario.dynamic_stake;
    let correct: Vec<&Address> = scenario.correct_validators.iter().collect();
    let roll = choice(scenario.seed, author, round, 1) % 100;
    if roll < policy.bond_percent as u64 {
        let pick = &correct[(choice(scenario.seed, author, round, 2) % correct.len() as u64) as usize];
        let stake = 1 + choice(scenario.seed, author, round, 3) % 3;
        batch.push(Transaction::Bond {
            validator: (*pick).clone(),
            stake,
        });
    } else if roll < policy.bond_percent as u64 + policy.unbond_percent as u64
        && scenario.faulty_validators.is_empty()
    {
        // Unbonds are generated only in all-correct populations, where every
        // reachable committee is trivially fault-tolerant.
        let pick = &correct[(choice(scenario.seed, author, round, 4) % correct.len() as u64) as usize];
        batch.push(Transaction::Unbond {
            validator: (*pick).clone(),
        });
    }
    batch.push(Transaction::Other {
        payload: format!("p-{author}-{round}"),
    });
    batch
}

/// Whether a correct validator would endorse `(author, round, prevs)` given
/// its current state.
fn willing_endorser(
    q: &ValidatorState,
    author: &Address,
    round: Round,
    prevs: &BTreeSet<Address>,
    params: &ProtocolParams,
) -> bool {
    is_new(author, round, q)
        && (round == 1
            || (is_closed(prevs, round - 1, &q.dag)
                && is_quorum(prevs, round - 1, &q.blockchain, params)))
}

/// Greedily assembles an endorser set from committee members until the
/// signers reach quorum stake: members are taken in descending stake (then
/// address) order, then a deterministic coin adds a few extra willing
/// members for variety. Returns `None` when no willing set reaches quorum.
fn pick_endorsers(
    scenario: &Scenario,
    s: &SystemState,
    committee: &Committee,
    author: &Address,
    round: Round,
    prevs: &BTreeSet<Address>,
    params: &ProtocolParams,
) -> Option<BTreeSet<Address>> {
    let author_stake = committee.stake_of(author)? as u128;
    let target = quorum_stake(committee);
    let mut candidates: Vec<(&Address, u64)> = committee
        .members
        .iter()
        .filter(|(a, _)| *a != author)
        .map(|(a, k)| (a, *k))
        .collect();
    candidates.sort_by(|(a1, k1), (a2, k2)| k2.cmp(k1).then(a1.cmp(a2)));

    let willing: Vec<(&Address, u64)> = candidates
        .into_iter()
        .filter(|(a, _)| match s.validator(a) {
            Some(q) => willing_endorser(q, author, round, prevs, params),
            None => true, // faulty members sign anything
        })
        .collect();

    let mut endorsers: BTreeSet<Address> = BTreeSet::new();
    let mut stake = author_stake;
    let mut it = willing.iter();
    while stake < target {
        let (a, k) = it.next()?;
        endorsers.insert((*a).clone());
        stake += *k as u128;
    }
    for (a, _) in it {
        if choice(scenario.seed, a, round, addr_seed(author)) % 2 == 0 {
            endorsers.insert((*a).clone());
        }
    }
    Some(endorsers)
}

/// The candidate certificate a correct validator would create in this state,
/// if the rules allow one.
fn correct_create_candidate(
    scenario: &Scenario,
    s: &SystemState,
    author: &Address,
    params: &ProtocolParams,
) -> Option<Certificate> {
    let v = s.validator(author)?;
    let round = v.round;
    if !v.dag.certs_with_author_round(author, round).is_empty() {
        return None;
    }
    let prevs: BTreeSet<Address> = if round == 1 {
        BTreeSet::new()
    } else {
        v.dag
            .certs_with_round(round - 1)
            .iter()
            .map(|c| c.author.clone())
            .collect()
    };
    if round != 1 && !is_quorum(&prevs, round - 1, &v.blockchain, params) {
        return None;
    }
    let committee = active_committee_at(round, &v.blockchain, params)?;
    let endorsers = pick_endorsers(scenario, s, &committee, author, round, &prevs, params)?;
    let cert = Certificate {
        author: author.clone(),
        round,
        transactions: transaction_batch(scenario, author, round),
        previous: prevs,
        endorsers,
    };
    match create_possible(&cert, s, params) {
        Ok(()) => Some(cert),
        Err(_) => None,
    }
}

/// Events proposed on behalf of the faulty validators under the scenario's
/// adversary strategy. Every returned event is enabled.
pub fn adversary_propose(
    strategy: AdversaryStrategy,
    s: &SystemState,
    scenario: &Scenario,
) -> BTreeSet<Event> {
    let params = scenario.params();
    let mut events = BTreeSet::new();
    match strategy {
        AdversaryStrategy::None => {}
        AdversaryStrategy::Equivocate => {
            let rounds: BTreeSet<Round> = s.validators.values().map(|v| v.round).collect();
            for f in &scenario.faulty_validators {
                for &round in &rounds {
                    for cert in equivocation_pair(scenario, s, f, round, &params) {
                        events.insert(Event::Create(cert));
                    }
                }
            }
        }
        AdversaryStrategy::UnderQuorum => {
            let rounds: BTreeSet<Round> = s.validators.values().map(|v| v.round).collect();
            for f in &scenario.faulty_validators {
                for &round in &rounds {
                    // No endorsers at all: with no correct endorser the
                    // creation rule imposes no checks, and the lone signer
                    // cannot reach quorum at acceptance time.
                    let cert = Certificate {
                        author: f.clone(),
                        round,
                        transactions: vec![Transaction::Other {
                            payload: format!("uq-{f}-{round}"),
                        }],
                        previous: BTreeSet::new(),
                        endorsers: BTreeSet::new(),
                    };
                    if create_possible(&cert, s, &params).is_ok()
                        && !already_created(s, &cert)
                    {
                        events.insert(Event::Create(cert));
                    }
                }
            }
        }
    }
    debug_assert!(events
        .iter()
        .all(|e| event_possible(e, s, &params).is_ok()));
    events
}

/// Whether an identical certificate is already in some DAG or in flight;
/// re-creating it would be a stutter.
fn already_created(s: &SystemState, cert: &Certificate) -> bool {
    s.network.iter().any(|m| &m.certificate == cert)
        || s.validators.values().any(|v| v.dag.contains(cert))
}

/// Two distinct certificates by faulty author `f` at `round`, endorsed by
/// disjoint groups of correct validators (with the remaining faulty members
/// backing both so either can pass signer checks on acceptance).
fn equivocation_pair(
    scenario: &Scenario,
    s: &SystemState,
    f: &Address,
    round: Round,
    params: &ProtocolParams,
) -> Vec<Certificate> {
    // References come from the first correct validator's view; endorsers are
    // filtered down to those whose own state agrees.
    let prevs: BTreeSet<Address> = if round == 1 {
        BTreeSet::new()
    } else {
        let Some(v) = s.validators.values().find(|v| {
            is_quorum(
                &v.dag
                    .certs_with_round(round - 1)
                    .iter()
                    .map(|c| c.author.clone())
                    .collect(),
                round - 1,
                &v.blockchain,
                params,
            )
        }) else {
            return Vec::new();
        };
        v.dag
            .certs_with_round(round - 1)
            .iter()
            .map(|c| c.author.clone())
            .collect()
    };
    let willing: Vec<&Address> = s
        .validators
        .iter()
        .filter(|(_, q)| willing_endorser(q, f, round, &prevs, params))
        .map(|(a, _)| a)
        .collect();
    let other_faulty: BTreeSet<Address> = scenario
        .faulty_validators
        .iter()
        .filter(|a| *a != f)
        .cloned()
        .collect();
    let mut out = Vec::new();
    // One certificate per non-empty group. Once one half has been created,
    // the remaining willing endorsers still back the other half, so the
    // counterpart certificate stays proposable in successor states.
    for (i, group) in [
        willing.iter().step_by(2).collect::<Vec<_>>(),
        willing.iter().skip(1).step_by(2).collect::<Vec<_>>(),
    ]
    .into_iter()
    .enumerate()
    {
        if group.is_empty() {
            continue;
        }
        let mut endorsers = other_faulty.clone();
        endorsers.extend(group.into_iter().map(|a| (**a).clone()));
        let cert = Certificate {
            author: f.clone(),
            round,
            transactions: vec![Transaction::Other {
                payload: format!("eqv-{f}-{round}-{i}"),
            }],
            previous: prevs.clone(),
            endorsers,
        };
        if create_possible(&cert, s, params).is_ok() && !already_created(s, &cert) {
            out.push(cert);
        }
    }
    out
}

/// All generated events enabled in this state: every advance and enabled
/// commit and accept, one create candidate per correct validator, and the
/// adversary's proposals.
pub fn enabled_events(s: &SystemState, scenario: &Scenario) -> BTreeSet<Event> {
    let params = scenario.params();
    let mut events: BTreeSet<Event> = BTreeSet::new();
    for a in s.validators.keys() {
        events.insert(Event::Advance(a.clone()));
        if commit_possible(a, s, &params).is_ok() {
            events.insert(Event::Commit(a.clone()));
        }
        if let Some(cert) = correct_create_candidate(scenario, s, a, &params) {
            events.insert(Event::Create(cert));
        }
    }
    for m in &s.network {
        if crate::transition::accept_possible(m, s, &params).is_ok() {
            events.insert(Event::Accept(m.clone()));
        }
    }
    events.extend(adversary_propose(scenario.adversary, s, scenario));
    debug_assert!(events
        .iter()
        .all(|e| event_possible(e, s, &params).is_ok()));
    events
}
