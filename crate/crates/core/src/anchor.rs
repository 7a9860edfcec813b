//! Leader selection, anchor identification and election, anchor collection,
//! certificate ordering, and block generation.

use std::collections::BTreeSet;

use crate::committee::{
    active_committee_at, max_faulty_stake, members_stake, ProtocolParams,
};
use crate::dag::{causal_history, has_path, voters_for};
use crate::types::{
    Address, Block, Blockchain, Certificate, Committee, Dag, Round, Transaction, ValidatorState,
};

/// Fixed 64-bit mixer (the splitmix64 finalizer). Part of the leader
/// schedule contract: changing it changes every leader assignment.
pub fn mix64(value: u64) -> u64 {
    let mut z = value.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Leader of `round` in committee `w`: the member at index `mix64(round)`
/// modulo the member count, with members in address order. Depends only on
/// the member address set and the round, never on stakes, so every validator
/// that computes the same committee picks the same leader.
///
/// The committee must not be empty.
pub fn leader_at(w: &Committee, round: Round) -> Address {
    assert!(!w.is_empty(), "leader_at: empty committee");
    let members: Vec<&Address> = w.addresses().collect();
    let idx = (mix64(round) % members.len() as u64) as usize;
    members[idx].clone()
}

/// Whether `c` is an anchor: present in the DAG, with a calculable non-empty
/// active committee at its round, and authored by that round's leader.
pub fn is_anchor(c: &Certificate, dag: &Dag, chain: &Blockchain, params: &ProtocolParams) -> bool {
    if !dag.contains(c) {
        return false;
    }
    match active_committee_at(c.round, chain, params) {
        Some(w) if !w.is_empty() => c.author == leader_at(&w, c.round),
        _ => false,
    }
}

/// Whether anchor `c` wins its election: the voters (authors of next-round
/// certificates referencing it) all belong to the active committee at the
/// next round, and their stake strictly exceeds that committee's maximum
/// faulty stake.
pub fn is_elected(c: &Certificate, dag: &Dag, chain: &Blockchain, params: &ProtocolParams) -> bool {
    let Some(w) = active_committee_at(c.round + 1, chain, params) else {
        return false;
    };
    let voters = voters_for(c, dag);
    match members_stake(&voters, &w) {
        Some(stake) => stake > max_faulty_stake(&w),
        None => false,
    }
}

/// The nearest earlier anchor reachable from `c`: scans rounds
/// `round(c)-2, round(c)-4, ...` and returns the first anchor found with a
/// path from `c`, or `None`.
///
/// `c` must be an anchor.
pub fn previous_anchor(
    c: &Certificate,
    dag: &Dag,
    chain: &Blockchain,
    params: &ProtocolParams,
) -> Option<Certificate> {
    assert!(
        is_anchor(c, dag, chain, params),
        "previous_anchor: not an anchor"
    );
    let mut round = c.round.checked_sub(2)?;
    while round >= 1 {
        if let Some(prev) = anchor_at_round(round, dag, chain, params) {
            if has_path(c, &prev, dag) {
                return Some(prev);
            }
        }
        round = match round.checked_sub(2) {
            Some(r) => r,
            None => break,
        };
    }
    None
}

/// The anchor at `round` in this DAG, if any: the certificate authored by the
/// round's leader. Under equivocation the least matching certificate is
/// taken.
pub fn anchor_at_round(
    round: Round,
    dag: &Dag,
    chain: &Blockchain,
    params: &ProtocolParams,
) -> Option<Certificate> {
    let w = active_committee_at(round, chain, params)?;
    if w.is_empty() {
        return None;
    }
    let leader = leader_at(&w, round);
    dag.cert_with_author_round(&leader, round).cloned()
}

/// Anchors to commit, earliest first, ending at `c`: walks `previous_anchor`
/// back while the rounds stay strictly above `cutoff`.
///
/// `c` must be an anchor.
pub fn collect_anchors(
    c: &Certificate,
    cutoff: Round,
    dag: &Dag,
    chain: &Blockchain,
    params: &ProtocolParams,
) -> Vec<Certificate> {
    let mut seq = vec![c.clone()];
    let mut cur = c.clone();
    while let Some(prev) = previous_anchor(&cur, dag, chain, params) {
        if prev.round <= cutoff {
            break;
        }
        seq.push(prev.clone());
        cur = prev;
    }
    seq.reverse();
    seq
}

/// Deterministic linearization of a certificate set: ascending by
/// (round, author), with the remaining fields breaking any residual tie.
pub fn order_certs(certs: &BTreeSet<Certificate>) -> Vec<Certificate> {
    // Certificate's Ord is round-major, so the sorted set iterates in order.
    certs.iter().cloned().collect()
}

/// Concatenates the transactions of the given certificates, in order.
pub fn collect_transactions(certs: &[Certificate]) -> Vec<Transaction> {
    certs
        .iter()
        .flat_map(|c| c.transactions.iter().cloned())
        .collect()
}

/// Appends one block per anchor, earliest anchor first. Each block carries
/// the anchor's round and the transactions of its causal history minus the
/// certificates already committed; the committed set is then replaced by
/// that causal history.
///
/// Every anchor must be in the DAG.
pub fn extend_blockchain(
    anchors: &[Certificate],
    dag: &Dag,
    chain: &Blockchain,
    committed: &BTreeSet<Certificate>,
) -> (Blockchain, BTreeSet<Certificate>) {
    let mut chain = chain.clone();
    let mut committed = committed.clone();
    for anchor in anchors {
        let history = causal_history(anchor, dag);
        let fresh: BTreeSet<Certificate> = history.difference(&committed).cloned().collect();
        chain.blocks.push(Block {
            round: anchor.round,
            transactions: collect_transactions(&order_certs(&fresh)),
        });
        committed = history;
    }
    (chain, committed)
}

/// The anchor at the validator's last committed round, if one has been
/// committed and the anchor is identifiable in its DAG.
pub fn last_anchor(v: &ValidatorState, params: &ProtocolParams) -> Option<Certificate> {
    if v.last == 0 {
        return None;
    }
    anchor_at_round(v.last, &v.dag, &v.blockchain, params)
}

/// Every anchor the validator has committed, earliest first; empty when
/// nothing has been committed.
pub fn collect_all_anchors(v: &ValidatorState, params: &ProtocolParams) -> Vec<Certificate> {
    match last_anchor(v, params) {
        Some(anchor) => collect_anchors(&anchor, 0, &v.dag, &v.blockchain, params),
        None => Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::committee::quorum_stake;

    fn committee(entries: &[(&str, u64)]) -> Committee {
        entries
            .iter()
            .map(|(a, k)| (Address::from(*a), *k))
            .collect()
    }

    fn cert(author: &Address, round: Round, prevs: &[Address]) -> Certificate {
        Certificate {
            author: author.clone(),
            round,
            transactions: vec![Transaction::Other {
                payload: format!("t-{author}-{round}"),
            }],
            previous: prevs.iter().cloned().collect(),
            endorsers: BTreeSet::new(),
        }
    }

    #[test]
    fn leader_of_singleton_committee() {
        let w = committee(&[("v1", 7)]);
        for r in 1..=50 {
            assert_eq!(leader_at(&w, r), "v1".into());
        }
    }

    #[test]
    fn leader_is_member_and_stake_independent() {
        let w1 = committee(&[("v1", 1), ("v2", 1)]);
        let w2 = committee(&[("v1", 5), ("v2", 9)]);
        for r in 1..=1000 {
            let l = leader_at(&w1, r);
            assert!(w1.contains(&l));
            assert_eq!(l, leader_at(&w2, r));
        }
        // Both members get selected somewhere.
        let picks: BTreeSet<Address> = (1..=100).map(|r| leader_at(&w1, r)).collect();
        assert_eq!(picks.len(), 2);
    }

    /// Builds the four-validator worked example: anchors at rounds 2 and 10
    /// get two votes, the round-4 anchor one vote, the round-6 anchor is
    /// absent, the round-8 anchor has one vote with no path from round 10.
    ///
    /// The grid is expressed relative to the computed leader schedule so the
    /// construction is independent of the concrete mixer values.
    pub(crate) fn skipped_anchor_dag(params: &ProtocolParams) -> (Dag, Vec<Address>) {
        let w = &params.genesis_committee;
        let all: Vec<Address> = w.addresses().cloned().collect();
        assert_eq!(all.len(), 4);
        let leader = |r: Round| leader_at(w, r);
        let others = |x: &Address| -> Vec<Address> {
            all.iter().filter(|a| *a != x).cloned().collect()
        };

        let mut dag = Dag::new();
        let mut layer: Vec<Certificate> = Vec::new();
        // Round 1: everyone, no references.
        for a in &all {
            let c = cert(a, 1, &[]);
            dag.insert(c.clone());
            layer.push(c);
        }
        // Round 2: everyone references the full round-1 layer.
        let full_prev: Vec<Address> = all.clone();
        for a in &all {
            dag.insert(cert(a, 2, &full_prev));
        }
        // Round 3: exactly two voters reference the round-2 anchor.
        let l2 = leader(2);
        let voters3: Vec<Address> = others(&l2).into_iter().take(2).collect();
        for a in &all {
            let prevs: Vec<Address> = if voters3.contains(a) {
                all.clone()
            } else {
                others(&l2)
            };
            dag.insert(cert(a, 3, &prevs));
        }
        // Round 4: full references.
        for a in &all {
            dag.insert(cert(a, 4, &all));
        }
        // Round 5: exactly one voter for the round-4 anchor.
        let l4 = leader(4);
        let voter5 = others(&l4)[0].clone();
        for a in &all {
            let prevs: Vec<Address> = if *a == voter5 { all.clone() } else { others(&l4) };
            dag.insert(cert(a, 5, &prevs));
        }
        // Round 6: the leader's certificate is absent.
        let l6 = leader(6);
        for a in others(&l6) {
            dag.insert(cert(&a, 6, &all));
        }
        // Round 7: full layer referencing the three round-6 certificates.
        let prev6 = others(&l6);
        for a in &all {
            dag.insert(cert(a, 7, &prev6));
        }
        // Rounds 8: full layer.
        for a in &all {
            dag.insert(cert(a, 8, &all));
        }
        // Round 9: exactly one voter for the round-8 anchor.
        let l8 = leader(8);
        let voter9 = others(&l8)[0].clone();
        for a in &all {
            let prevs: Vec<Address> = if *a == voter9 { all.clone() } else { others(&l8) };
            dag.insert(cert(a, 9, &prevs));
        }
        // Round 10: the anchor's references avoid the round-9 voter, cutting
        // every path from the round-10 anchor to the round-8 anchor.
        let l10 = leader(10);
        for a in &all {
            let prevs: Vec<Address> = if *a == l10 { others(&voter9) } else { all.clone() };
            dag.insert(cert(a, 10, &prevs));
        }
        // Round 11: two voters for the round-10 anchor.
        let voters11: Vec<Address> = others(&l10).into_iter().take(2).collect();
        for a in &voters11 {
            dag.insert(cert(a, 11, &all));
        }
        let _ = layer;
        (dag, all)
    }

    fn four_validator_params() -> ProtocolParams {
        ProtocolParams::new(
            committee(&[("v1", 1), ("v2", 1), ("v3", 1), ("v4", 1)]),
            12,
        )
    }

    #[test]
    fn worked_example_anchor_statuses() {
        let params = four_validator_params();
        let (dag, _) = skipped_anchor_dag(&params);
        let chain = Blockchain::default();
        let w = &params.genesis_committee;

        let a2 = anchor_at_round(2, &dag, &chain, &params).unwrap();
        assert!(is_anchor(&a2, &dag, &chain, &params));
        assert_eq!(voters_for(&a2, &dag).len(), 2);
        assert!(is_elected(&a2, &dag, &chain, &params));

        let a4 = anchor_at_round(4, &dag, &chain, &params).unwrap();
        assert_eq!(voters_for(&a4, &dag).len(), 1);
        assert!(!is_elected(&a4, &dag, &chain, &params));

        assert!(anchor_at_round(6, &dag, &chain, &params).is_none());

        let a8 = anchor_at_round(8, &dag, &chain, &params).unwrap();
        assert_eq!(voters_for(&a8, &dag).len(), 1);
        assert!(!is_elected(&a8, &dag, &chain, &params));

        let a10 = anchor_at_round(10, &dag, &chain, &params).unwrap();
        assert_eq!(voters_for(&a10, &dag).len(), 2);
        assert!(is_elected(&a10, &dag, &chain, &params));

        // Round 10 reaches round 4 but not round 8.
        assert!(has_path(&a10, &a4, &dag));
        assert!(!has_path(&a10, &a8, &dag));
        // A non-leader certificate at an anchor round is not an anchor.
        let non_leader = dag
            .certs_with_round(2)
            .iter()
            .find(|c| c.author != leader_at(w, 2))
            .unwrap()
            .clone();
        assert!(!is_anchor(&non_leader, &dag, &chain, &params));
    }

    #[test]
    fn worked_example_collection() {
        let params = four_validator_params();
        let (dag, _) = skipped_anchor_dag(&params);
        let chain = Blockchain::default();

        let a2 = anchor_at_round(2, &dag, &chain, &params).unwrap();
        let a4 = anchor_at_round(4, &dag, &chain, &params).unwrap();
        let a10 = anchor_at_round(10, &dag, &chain, &params).unwrap();

        assert_eq!(previous_anchor(&a10, &dag, &chain, &params), Some(a4.clone()));
        assert_eq!(previous_anchor(&a4, &dag, &chain, &params), Some(a2.clone()));
        assert_eq!(previous_anchor(&a2, &dag, &chain, &params), None);

        assert_eq!(
            collect_anchors(&a10, 2, &dag, &chain, &params),
            vec![a4.clone(), a10.clone()]
        );
        assert_eq!(collect_anchors(&a2, 0, &dag, &chain, &params), vec![a2]);
        assert_eq!(collect_anchors(&a10, 4, &dag, &chain, &params), vec![a10]);
    }

    #[test]
    fn committee_undefined_blocks_anchor() {
        // Lookback 1 and an empty chain: round 4 committee is uncalculable.
        let params = ProtocolParams::new(committee(&[("v1", 1)]), 1);
        let chain = Blockchain::default();
        let c = cert(&"v1".into(), 4, &["v1".into()]);
        let dag: Dag = [c.clone()].into_iter().collect();
        assert!(!is_anchor(&c, &dag, &chain, &params));
    }

    #[test]
    fn ordering_and_transaction_collection() {
        assert!(order_certs(&BTreeSet::new()).is_empty());
        let c21 = cert(&"v2".into(), 1, &[]);
        let c11 = cert(&"v1".into(), 1, &[]);
        let c12 = cert(&"v1".into(), 2, &["v1".into()]);
        assert_eq!(
            order_certs(&[c21.clone(), c11.clone()].into()),
            vec![c11.clone(), c21.clone()]
        );
        assert_eq!(
            order_certs(&[c12.clone(), c21.clone()].into()),
            vec![c21.clone(), c12.clone()]
        );

        assert!(collect_transactions(&[]).is_empty());
        let txs = collect_transactions(&[c11.clone(), c21.clone()]);
        assert_eq!(txs.len(), 2);
        assert_eq!(
            txs[0],
            Transaction::Other {
                payload: "t-v1-1".into()
            }
        );
    }

    #[test]
    fn extend_blockchain_replaces_committed() {
        let params = four_validator_params();
        let (dag, _) = skipped_anchor_dag(&params);
        let chain = Blockchain::default();
        let a2 = anchor_at_round(2, &dag, &chain, &params).unwrap();
        let a4 = anchor_at_round(4, &dag, &chain, &params).unwrap();
        let a10 = anchor_at_round(10, &dag, &chain, &params).unwrap();

        let (empty_chain, empty_committed) =
            extend_blockchain(&[], &dag, &chain, &BTreeSet::new());
        assert!(empty_chain.is_empty() && empty_committed.is_empty());

        let (chain1, committed1) =
            extend_blockchain(&[a2.clone()], &dag, &chain, &BTreeSet::new());
        assert_eq!(chain1.len(), 1);
        assert_eq!(chain1.blocks[0].round, 2);
        assert_eq!(committed1, causal_history(&a2, &dag));
        // Five transactions: the anchor plus the full round-1 layer.
        assert_eq!(chain1.blocks[0].transactions.len(), 5);

        let (chain2, committed2) =
            extend_blockchain(&[a4.clone(), a10.clone()], &dag, &chain1, &committed1);
        assert_eq!(chain2.len(), 3);
        assert_eq!(chain2.blocks[1].round, 4);
        assert_eq!(chain2.blocks[2].round, 10);
        assert_eq!(committed2, causal_history(&a10, &dag));
        // Block 4 excludes what block 2 already committed.
        let h4 = causal_history(&a4, &dag);
        let fresh4: BTreeSet<Certificate> = h4.difference(&committed1).cloned().collect();
        assert_eq!(chain2.blocks[1].transactions.len(), fresh4.len());
    }

    #[test]
    fn last_anchor_and_collect_all() {
        let params = four_validator_params();
        let (dag, _) = skipped_anchor_dag(&params);
        let mut v = ValidatorState::initial();
        assert!(last_anchor(&v, &params).is_none());
        assert!(collect_all_anchors(&v, &params).is_empty());

        v.dag = dag;
        v.last = 2;
        let a2 = anchor_at_round(2, &v.dag, &v.blockchain, &params).unwrap();
        assert_eq!(last_anchor(&v, &params), Some(a2.clone()));
        assert_eq!(collect_all_anchors(&v, &params), vec![a2.clone()]);

        v.last = 10;
        let a4 = anchor_at_round(4, &v.dag, &v.blockchain, &params).unwrap();
        let a10 = anchor_at_round(10, &v.dag, &v.blockchain, &params).unwrap();
        assert_eq!(collect_all_anchors(&v, &params), vec![a2, a4, a10]);

        // A corrupted last round without a matching leader certificate yields
        // no last anchor.
        v.last = 7;
        let l7 = leader_at(&params.genesis_committee, 7);
        if v.dag.cert_with_author_round(&l7, 7).is_none() {
            assert!(last_anchor(&v, &params).is_none());
        }
    }

    #[test]
    fn collected_rounds_strictly_increase() {
        let params = four_validator_params();
        let (dag, _) = skipped_anchor_dag(&params);
        let chain = Blockchain::default();
        let a10 = anchor_at_round(10, &dag, &chain, &params).unwrap();
        for cutoff in [0, 2, 4, 6, 8] {
            let seq = collect_anchors(&a10, cutoff, &dag, &chain, &params);
            assert_eq!(seq.last(), Some(&a10));
            for pair in seq.windows(2) {
                assert!(pair[0].round < pair[1].round);
            }
            for c in &seq {
                assert!(c.round > cutoff || c == &a10);
            }
        }
    }

    #[test]
    fn quorum_sanity_for_worked_example() {
        // The generated grid keeps every reference set at quorum stake.
        let params = four_validator_params();
        let (dag, _) = skipped_anchor_dag(&params);
        let w = &params.genesis_committee;
        let q = quorum_stake(w);
        for c in dag.iter().filter(|c| c.round > 1) {
            let stake = members_stake(&c.previous, w).unwrap();
            assert!(stake >= q, "{} has sub-quorum references", c.label());
        }
    }
}
