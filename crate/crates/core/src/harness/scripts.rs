//! Bundled scripted scenarios: fixed event lists exercising committee
//! rotation, anchor skipping, and a stake-driven fork. These drive the
//! acceptance suite and ship as ready-to-run scenario files.

use std::collections::{BTreeMap, BTreeSet};

use crate::anchor::leader_at;
use crate::harness::scenario::Scenario;
use crate::types::{
    Address, Certificate, Event, Message, Round, Transaction,
};

fn addr(n: &str) -> Address {
    Address::from(n)
}

/// One creation layer: per author, the referenced previous-round authors.
type Layer = Vec<(Address, BTreeSet<Address>)>;

/// Emits the event list for a synchronized grid execution: per round,
/// everyone advances, the layer's authors create (endorsed by all other
/// validators), every message is accepted, and, after scheduled rounds,
/// every validator commits.
fn grid_events(
    validators: &[Address],
    layers: &[Layer],
    commits_after: &BTreeSet<Round>,
    txs: &BTreeMap<(Address, Round), Vec<Transaction>>,
) -> Vec<Event> {
    let mut events = Vec::new();
    for (i, layer) in layers.iter().enumerate() {
        let round = (i + 1) as Round;
        if round > 1 {
            for v in validators {
                events.push(Event::Advance(v.clone()));
            }
        }
        let mut messages = Vec::new();
        for (author, prevs) in layer {
            let endorsers: BTreeSet<Address> = validators
                .iter()
                .filter(|v| *v != author)
                .cloned()
                .collect();
            let transactions = txs
                .get(&(author.clone(), round))
                .cloned()
                .unwrap_or_else(|| {
                    vec![Transaction::Other {
                        payload: format!("p-{author}-{round}"),
                    }]
                });
            let cert = Certificate {
                author: author.clone(),
                round,
                transactions,
                previous: prevs.clone(),
                endorsers,
            };
            events.push(Event::Create(cert.clone()));
            for dest in validators.iter().filter(|v| *v != author) {
                messages.push(Message {
                    certificate: cert.clone(),
                    destination: dest.clone(),
                });
            }
        }
        messages.sort();
        events.extend(messages.into_iter().map(Event::Accept));
        if commits_after.contains(&round) {
            for v in validators {
                events.push(Event::Commit(v.clone()));
            }
        }
    }
    events
}

fn full_set(validators: &[Address]) -> BTreeSet<Address> {
    validators.iter().cloned().collect()
}

fn all_but(validators: &[Address], excluded: &Address) -> BTreeSet<Address> {
    validators
        .iter()
        .filter(|v| *v != excluded)
        .cloned()
        .collect()
}

/// Four equal-stake validators running eleven rounds with a large lookback.
/// The round-2 and round-10 anchors gather two votes and are committed; the
/// round-4 anchor gathers one vote and is only collected later from round
/// 10; the round-6 anchor is absent and the round-8 anchor, with one vote
/// and no path from round 10, is skipped permanently.
///
/// Commits happen at validator rounds 3 and 11; the resulting chain has
/// blocks at rounds 2, 4, and 10.
pub fn skipped_anchors() -> Scenario {
    let mut scenario = Scenario::equal_stake(&["v1", "v2", "v3", "v4"], 12);
    let validators: Vec<Address> = scenario.correct_validators.iter().cloned().collect();
    let committee = scenario.params().genesis_committee;
    let leader = |r: Round| leader_at(&committee, r);
    let others =
        |x: &Address| -> Vec<Address> { validators.iter().filter(|a| *a != x).cloned().collect() };

    let all = full_set(&validators);
    let l2 = leader(2);
    let l4 = leader(4);
    let l6 = leader(6);
    let l8 = leader(8);
    let l10 = leader(10);
    let voters3: Vec<Address> = others(&l2).into_iter().take(2).collect();
    let voter5 = others(&l4)[0].clone();
    let voter9 = others(&l8)[0].clone();

    let layer = |authors: &[Address], prevs_for: &dyn Fn(&Address) -> BTreeSet<Address>| -> Layer {
        authors.iter().map(|a| (a.clone(), prevs_for(a))).collect()
    };

    let layers: Vec<Layer> = vec![
        // 1: everyone, no references.
        layer(&validators, &|_| BTreeSet::new()),
        // 2: everyone references the full round-1 layer.
        layer(&validators, &|_| all.clone()),
        // 3: two voters reference the round-2 anchor, the rest skip it.
        layer(&validators, &|a| {
            if voters3.contains(a) {
                all.clone()
            } else {
                all_but(&validators, &l2)
            }
        }),
        // 4: full references.
        layer(&validators, &|_| all.clone()),
        // 5: a single voter for the round-4 anchor.
        layer(&validators, &|a| {
            if a == &voter5 {
                all.clone()
            } else {
                all_but(&validators, &l4)
            }
        }),
        // 6: the leader is absent.
        layer(&others(&l6), &|_| all.clone()),
        // 7: references the three round-6 certificates.
        layer(&validators, &|_| all_but(&validators, &l6)),
        // 8: full layer again.
        layer(&validators, &|_| all.clone()),
        // 9: a single voter for the round-8 anchor.
        layer(&validators, &|a| {
            if a == &voter9 {
                all.clone()
            } else {
                all_but(&validators, &l8)
            }
        }),
        // 10: the anchor avoids the round-9 voter, severing every path to
        // the round-8 anchor.
        layer(&validators, &|a| {
            if a == &l10 {
                all_but(&validators, &voter9)
            } else {
                all.clone()
            }
        }),
        // 11: two voters for the round-10 anchor.
        layer(&others(&l10)[..2], &|_| all.clone()),
    ];

    let commits_after: BTreeSet<Round> = [3, 11].into();
    let events = grid_events(&validators, &layers, &commits_after, &BTreeMap::new());
    scenario.max_events = events.len();
    scenario.max_round = 11;
    scenario.script = Some(events);
    scenario
}

/// Four validators running eleven rounds with lookback 4, committing a block
/// at every even round. Bonds in rounds 1 and 3 and an unbond in round 9
/// land in the blocks at rounds 2, 4, and 10, so the bonded committee steps
/// through four values while the active committee follows four rounds
/// behind.
pub fn committee_rotation() -> Scenario {
    let mut scenario = Scenario::equal_stake(&["v1", "v2", "v3", "v4"], 4);
    let validators: Vec<Address> = scenario.correct_validators.iter().cloned().collect();
    let all = full_set(&validators);

    let layers: Vec<Layer> = (1..=11)
        .map(|round| {
            validators
                .iter()
                .map(|a| {
                    (
                        a.clone(),
                        if round == 1 { BTreeSet::new() } else { all.clone() },
                    )
                })
                .collect()
        })
        .collect();

    let mut txs: BTreeMap<(Address, Round), Vec<Transaction>> = BTreeMap::new();
    txs.insert(
        (addr("v1"), 1),
        vec![
            Transaction::Bond {
                validator: addr("v1"),
                stake: 1,
            },
            Transaction::Other {
                payload: "p-v1-1".into(),
            },
        ],
    );
    txs.insert(
        (addr("v1"), 3),
        vec![
            Transaction::Bond {
                validator: addr("v2"),
                stake: 2,
            },
            Transaction::Other {
                payload: "p-v1-3".into(),
            },
        ],
    );
    txs.insert(
        (addr("v1"), 9),
        vec![
            Transaction::Unbond {
                validator: addr("v1"),
            },
            Transaction::Other {
                payload: "p-v1-9".into(),
            },
        ],
    );

    let commits_after: BTreeSet<Round> = [3, 5, 7, 9, 11].into();
    let events = grid_events(&validators, &layers, &commits_after, &txs);
    scenario.max_events = events.len();
    scenario.max_round = 11;
    scenario.script = Some(events);
    scenario
}

/// Two correct validators and one faulty validator holding stake beyond the
/// tolerated bound. The faulty validator equivocates at round 1 with
/// disjoint endorsers; every later certificate must reference its heavy
/// stake, so the validators commit blocks built from different histories
/// and their blockchains fork.
pub fn stake_fork() -> Scenario {
    let v1 = addr("v1");
    let v2 = addr("v2");
    let f3 = addr("f3");
    let mut scenario = Scenario::equal_stake(&["v1", "v2"], 4);
    scenario.genesis_committee.insert(f3.clone(), 4);
    scenario.faulty_validators.insert(f3.clone());
    scenario.adversary = crate::harness::scenario::AdversaryStrategy::Equivocate;

    let cert = |author: &Address,
                round: Round,
                payload: &str,
                prevs: &[&Address],
                endorsers: &[&Address]| Certificate {
        author: author.clone(),
        round,
        transactions: vec![Transaction::Other {
            payload: payload.into(),
        }],
        previous: prevs.iter().map(|a| (*a).clone()).collect(),
        endorsers: endorsers.iter().map(|a| (*a).clone()).collect(),
    };
    let msg = |c: &Certificate, dest: &Address| {
        Event::Accept(Message {
            certificate: c.clone(),
            destination: dest.clone(),
        })
    };

    // Round 1: the faulty validator signs two distinct certificates, each
    // endorsed by one correct validator; each validator accepts only its
    // own version.
    let cf_x = cert(&f3, 1, "x", &[], &[&v1]);
    let cf_y = cert(&f3, 1, "y", &[], &[&v2]);
    let c_v1 = cert(&v1, 1, "t1", &[], &[&f3]);
    let c_v2 = cert(&v2, 1, "t2", &[], &[&f3]);
    // Round 2 and 3: everyone references all three round-1 authors, which
    // both validators consider closed through their own version of the
    // faulty certificate.
    let trio = [&f3, &v1, &v2];
    let c1_2 = cert(&v1, 2, "a", &trio, &[&f3]);
    let c2_2 = cert(&v2, 2, "b", &trio, &[&f3]);
    let cf_2 = cert(&f3, 2, "c", &trio, &[&v1]);
    let c1_3 = cert(&v1, 3, "d", &trio, &[&f3]);
    let c2_3 = cert(&v2, 3, "e", &trio, &[&f3]);

    let events = vec![
        Event::Create(cf_x.clone()),
        Event::Create(cf_y.clone()),
        msg(&cf_x, &v1),
        msg(&cf_y, &v2),
        Event::Create(c_v1.clone()),
        Event::Create(c_v2.clone()),
        msg(&c_v1, &v2),
        msg(&c_v2, &v1),
        Event::Advance(v1.clone()),
        Event::Advance(v2.clone()),
        Event::Create(c1_2.clone()),
        Event::Create(c2_2.clone()),
        Event::Create(cf_2.clone()),
        msg(&c1_2, &v2),
        msg(&c2_2, &v1),
        msg(&cf_2, &v1),
        msg(&cf_2, &v2),
        Event::Advance(v1.clone()),
        Event::Advance(v2.clone()),
        Event::Create(c1_3.clone()),
        Event::Create(c2_3.clone()),
        msg(&c1_3, &v2),
        msg(&c2_3, &v1),
        Event::Commit(v1.clone()),
        Event::Commit(v2.clone()),
    ];
    scenario.max_events = events.len();
    scenario.max_round = 3;
    scenario.script = Some(events);
    scenario
}
