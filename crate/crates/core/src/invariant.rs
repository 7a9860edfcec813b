//! Executable checkers for the 19 state invariants, the fault-tolerance
//! predicate, and the auxiliary certificate sets they quantify over.
//!
//! Eleven invariants hold on every reachable state; the remaining eight hold
//! only along fault-tolerant executions. Checkers report every violation
//! they find, with concrete witnesses, so that traces can be minimized
//! against a specific violation.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::anchor::{collect_all_anchors, extend_blockchain, is_elected, last_anchor};
use crate::committee::{
    active_committee_at, is_quorum, last_block_round, max_faulty_stake, members_stake,
    ProtocolParams,
};
use crate::dag::has_path;
use crate::transition::committee_horizon;
use crate::types::{Address, Blockchain, Certificate, Committee, Round, SystemState};

/// Identifiers for the 19 invariants.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InvariantId {
    LastBlockRound,
    OrderedBlockRounds,
    EvenBlockRounds,
    BackwardClosure,
    SignerQuorum,
    SignerRecords,
    NoSelfEndorsement,
    SignedNonequivocation,
    DagNonequivocation,
    SignedPreviousQuorum,
    DagPreviousQuorum,
    LastAnchorPresence,
    LastAnchorVoters,
    AnchorPaths,
    AnchorNonforking,
    CommittedRedundancy,
    BlockchainRedundancy,
    BlockchainNonforking,
    CommitteeAgreement,
}

impl InvariantId {
    pub const ALL: [InvariantId; 19] = [
        InvariantId::LastBlockRound,
        InvariantId::OrderedBlockRounds,
        InvariantId::EvenBlockRounds,
        InvariantId::BackwardClosure,
        InvariantId::SignerQuorum,
        InvariantId::SignerRecords,
        InvariantId::NoSelfEndorsement,
        InvariantId::SignedNonequivocation,
        InvariantId::DagNonequivocation,
        InvariantId::SignedPreviousQuorum,
        InvariantId::DagPreviousQuorum,
        InvariantId::LastAnchorPresence,
        InvariantId::LastAnchorVoters,
        InvariantId::AnchorPaths,
        InvariantId::AnchorNonforking,
        InvariantId::CommittedRedundancy,
        InvariantId::BlockchainRedundancy,
        InvariantId::BlockchainNonforking,
        InvariantId::CommitteeAgreement,
    ];

    /// Whether the invariant is guaranteed only along fault-tolerant
    /// executions.
    pub fn fault_tolerance_only(self) -> bool {
        matches!(
            self,
            InvariantId::DagNonequivocation
                | InvariantId::DagPreviousQuorum
                | InvariantId::AnchorPaths
                | InvariantId::AnchorNonforking
                | InvariantId::CommittedRedundancy
                | InvariantId::BlockchainRedundancy
                | InvariantId::BlockchainNonforking
                | InvariantId::CommitteeAgreement
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            InvariantId::LastBlockRound => "last-block-round",
            InvariantId::OrderedBlockRounds => "ordered-block-rounds",
            InvariantId::EvenBlockRounds => "even-block-rounds",
            InvariantId::BackwardClosure => "backward-closure",
            InvariantId::SignerQuorum => "signer-quorum",
            InvariantId::SignerRecords => "signer-records",
            InvariantId::NoSelfEndorsement => "no-self-endorsement",
            InvariantId::SignedNonequivocation => "signed-nonequivocation",
            InvariantId::DagNonequivocation => "dag-nonequivocation",
            InvariantId::SignedPreviousQuorum => "signed-previous-quorum",
            InvariantId::DagPreviousQuorum => "dag-previous-quorum",
            InvariantId::LastAnchorPresence => "last-anchor-presence",
            InvariantId::LastAnchorVoters => "last-anchor-voters",
            InvariantId::AnchorPaths => "anchor-paths",
            InvariantId::AnchorNonforking => "anchor-nonforking",
            InvariantId::CommittedRedundancy => "committed-redundancy",
            InvariantId::BlockchainRedundancy => "blockchain-redundancy",
            InvariantId::BlockchainNonforking => "blockchain-nonforking",
            InvariantId::CommitteeAgreement => "committee-agreement",
        }
    }
}

impl std::fmt::Display for InvariantId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// An (author, round) reference to a certificate, for witness reports.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Serialize, Deserialize)]
pub struct CertRef {
    pub author: Address,
    pub round: Round,
}

impl From<&Certificate> for CertRef {
    fn from(c: &Certificate) -> Self {
        CertRef {
            author: c.author.clone(),
            round: c.round,
        }
    }
}

/// A concrete counterexample to one invariant. Re-checking the same state
/// reproduces the same violations in the same order.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Violation {
    pub invariant: InvariantId,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub validators: Vec<Address>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub certificates: Vec<CertRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block_index: Option<usize>,
    pub detail: String,
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.invariant, self.detail)
    }
}

fn violation(invariant: InvariantId, detail: impl Into<String>) -> Violation {
    Violation {
        invariant,
        validators: Vec::new(),
        certificates: Vec::new(),
        block_index: None,
        detail: detail.into(),
    }
}

/// Committee members that are not correct validators of `s`.
pub fn faulty_members(w: &Committee, s: &SystemState) -> BTreeSet<Address> {
    w.addresses()
        .filter(|a| !s.is_correct(a))
        .cloned()
        .collect()
}

/// Every active committee any validator can currently calculate, as
/// (validator, round, committee) triples. Rounds beyond the chain's horizon
/// are undefined, which bounds the otherwise unbounded quantifier.
fn calculable_committees<'a>(
    s: &'a SystemState,
    params: &'a ProtocolParams,
) -> impl Iterator<Item = (&'a Address, Round, Committee)> + 'a {
    s.validators.iter().flat_map(move |(a, v)| {
        let horizon = committee_horizon(last_block_round(&v.blockchain), params);
        (1..=horizon).filter_map(move |r| {
            active_committee_at(r, &v.blockchain, params).map(|w| (a, r, w))
        })
    })
}

/// Whether every calculable active committee keeps its faulty stake within
/// the maximum faulty stake.
pub fn is_fault_tolerant(s: &SystemState, params: &ProtocolParams) -> bool {
    calculable_committees(s, params).all(|(_, _, w)| {
        let faulty = faulty_members(&w, s);
        members_stake(&faulty, &w).expect("faulty members are committee members")
            <= max_faulty_stake(&w)
    })
}

/// Union of every validator's DAG and every certificate in flight.
pub fn all_certs(s: &SystemState) -> BTreeSet<Certificate> {
    let mut certs: BTreeSet<Certificate> = BTreeSet::new();
    for v in s.validators.values() {
        certs.extend(v.dag.iter().cloned());
    }
    certs.extend(s.network.iter().map(|m| m.certificate.clone()));
    certs
}

/// Certificates in the system signed (authored or endorsed) by `a`.
pub fn signed_certs(a: &Address, s: &SystemState) -> BTreeSet<Certificate> {
    all_certs(s)
        .into_iter()
        .filter(|c| c.author == *a || c.endorsers.contains(a))
        .collect()
}

fn check_last_block_round(s: &SystemState) -> Vec<Violation> {
    let id = InvariantId::LastBlockRound;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        let expected = last_block_round(&v.blockchain);
        if v.last != expected {
            let mut viol = violation(
                id,
                format!("{a}: last committed round {} but newest block round {expected}", v.last),
            );
            viol.validators.push(a.clone());
            out.push(viol);
        }
    }
    out
}

fn check_ordered_block_rounds(s: &SystemState) -> Vec<Violation> {
    let id = InvariantId::OrderedBlockRounds;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        for (i, pair) in v.blockchain.blocks.windows(2).enumerate() {
            if pair[0].round >= pair[1].round {
                let mut viol = violation(
                    id,
                    format!(
                        "{a}: block {} round {} not below block {} round {}",
                        i,
                        pair[0].round,
                        i + 1,
                        pair[1].round
                    ),
                );
                viol.validators.push(a.clone());
                viol.block_index = Some(i + 1);
                out.push(viol);
            }
        }
    }
    out
}

fn check_even_block_rounds(s: &SystemState) -> Vec<Violation> {
    let id = InvariantId::EvenBlockRounds;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        for (i, b) in v.blockchain.blocks.iter().enumerate() {
            if b.round % 2 != 0 {
                let mut viol = violation(id, format!("{a}: block {i} has odd round {}", b.round));
                viol.validators.push(a.clone());
                viol.block_index = Some(i);
                out.push(viol);
            }
        }
    }
    out
}

fn check_backward_closure(s: &SystemState) -> Vec<Violation> {
    let id = InvariantId::BackwardClosure;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        for c in v.dag.iter() {
            for p in &c.previous {
                let dangling = c.round == 1
                    || v.dag.certs_with_author_round(p, c.round - 1).is_empty();
                if dangling {
                    let mut viol = violation(
                        id,
                        format!("{a}: {} references {p} with no certificate one round below", c.label()),
                    );
                    viol.validators.push(a.clone());
                    viol.certificates.push(c.into());
                    out.push(viol);
                }
            }
        }
    }
    out
}

fn check_signer_quorum(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::SignerQuorum;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        for c in v.dag.iter() {
            if !is_quorum(&c.signers(), c.round, &v.blockchain, params) {
                let mut viol = violation(
                    id,
                    format!("{a}: signers of {} are not a quorum", c.label()),
                );
                viol.validators.push(a.clone());
                viol.certificates.push(c.into());
                out.push(viol);
            }
        }
    }
    out
}

fn check_signer_records(s: &SystemState) -> (Vec<Violation>, SignerRecordStats) {
    let id = InvariantId::SignerRecords;
    let mut out = Vec::new();
    let mut stats = SignerRecordStats::default();
    for (a, v) in &s.validators {
        for c in signed_certs(a, s) {
            let matches = v.dag.certs_with_author_round(&c.author, c.round);
            let in_dag = !matches.is_empty();
            let endorsed = v
                .endorsed
                .iter()
                .any(|d| d.author == c.author && d.round == c.round);
            if !in_dag && !endorsed {
                let mut viol = violation(
                    id,
                    format!("{a}: signed {} but holds no record of it", c.label()),
                );
                viol.validators.push(a.clone());
                viol.certificates.push((&c).into());
                out.push(viol);
            } else if in_dag && !matches.contains(&c) {
                // The weak disjunct held only through a same-author-round
                // certificate that is not the signed one.
                stats.weak_author_round_matches += 1;
            } else {
                stats.strengthened_matches += 1;
            }
        }
    }
    (out, stats)
}

/// How often the signer-records disjunction was satisfied by the certificate
/// itself versus only by a same-author-round stand-in. Tracked as a
/// statistic; the stronger form is not asserted.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignerRecordStats {
    pub strengthened_matches: u64,
    pub weak_author_round_matches: u64,
}

fn check_no_self_endorsement(s: &SystemState) -> Vec<Violation> {
    let id = InvariantId::NoSelfEndorsement;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        for d in &v.endorsed {
            if d.author == *a {
                let mut viol = violation(
                    id,
                    format!("{a}: endorsed own certificate at round {}", d.round),
                );
                viol.validators.push(a.clone());
                out.push(viol);
            }
        }
    }
    out
}

fn equivocation_pairs(certs: &BTreeSet<Certificate>) -> Vec<(Certificate, Certificate)> {
    let mut out = Vec::new();
    let certs: Vec<&Certificate> = certs.iter().collect();
    for (i, c1) in certs.iter().enumerate() {
        for c2 in &certs[i + 1..] {
            if c1.author == c2.author && c1.round == c2.round {
                out.push(((*c1).clone(), (*c2).clone()));
            }
        }
    }
    out
}

fn check_signed_nonequivocation(s: &SystemState) -> Vec<Violation> {
    let id = InvariantId::SignedNonequivocation;
    let mut out = Vec::new();
    for a in s.validators.keys() {
        for (c1, c2) in equivocation_pairs(&signed_certs(a, s)) {
            let mut viol = violation(
                id,
                format!("{a}: signed two distinct certificates for {}", c1.label()),
            );
            viol.validators.push(a.clone());
            viol.certificates.push((&c1).into());
            viol.certificates.push((&c2).into());
            out.push(viol);
        }
    }
    out
}

fn check_dag_nonequivocation(s: &SystemState) -> Vec<Violation> {
    let id = InvariantId::DagNonequivocation;
    let mut out = Vec::new();
    let validators: Vec<(&Address, &crate::types::ValidatorState)> = s.validators.iter().collect();
    for (i, (a1, v1)) in validators.iter().enumerate() {
        for (a2, v2) in &validators[i..] {
            let mut seen: BTreeSet<(&Certificate, &Certificate)> = BTreeSet::new();
            for c1 in v1.dag.iter() {
                for c2 in v2.dag.certs_with_author_round(&c1.author, c1.round) {
                    if c1 != c2 && seen.insert((c1.min(c2), c1.max(c2))) {
                        let mut viol = violation(
                            id,
                            format!(
                                "dags of {a1} and {a2} hold distinct certificates for {}",
                                c1.label()
                            ),
                        );
                        viol.validators.push((*a1).clone());
                        viol.validators.push((*a2).clone());
                        viol.certificates.push(c1.into());
                        viol.certificates.push(c2.into());
                        out.push(viol);
                    }
                }
            }
        }
    }
    out
}

fn previous_quorum_holds(
    c: &Certificate,
    chain: &Blockchain,
    params: &ProtocolParams,
) -> bool {
    if c.round == 1 {
        c.previous.is_empty()
    } else {
        !c.previous.is_empty() && is_quorum(&c.previous, c.round - 1, chain, params)
    }
}

fn check_signed_previous_quorum(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::SignedPreviousQuorum;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        for c in signed_certs(a, s) {
            if !previous_quorum_holds(&c, &v.blockchain, params) {
                let mut viol = violation(
                    id,
                    format!("{a}: references of signed {} are not a non-empty quorum", c.label()),
                );
                viol.validators.push(a.clone());
                viol.certificates.push((&c).into());
                out.push(viol);
            }
        }
    }
    out
}

fn check_dag_previous_quorum(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::DagPreviousQuorum;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        for c in v.dag.iter() {
            if !previous_quorum_holds(c, &v.blockchain, params) {
                let mut viol = violation(
                    id,
                    format!("{a}: references of {} are not a non-empty quorum", c.label()),
                );
                viol.validators.push(a.clone());
                viol.certificates.push(c.into());
                out.push(viol);
            }
        }
    }
    out
}

fn check_last_anchor_presence(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::LastAnchorPresence;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        if v.last != 0 && last_anchor(v, params).is_none() {
            let mut viol = violation(
                id,
                format!("{a}: last committed round is {} but no anchor is identifiable there", v.last),
            );
            viol.validators.push(a.clone());
            out.push(viol);
        }
    }
    out
}

fn check_last_anchor_voters(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::LastAnchorVoters;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        if let Some(anchor) = last_anchor(v, params) {
            if !is_elected(&anchor, &v.dag, &v.blockchain, params) {
                let mut viol = violation(
                    id,
                    format!("{a}: last anchor {} lacks winning votes", anchor.label()),
                );
                viol.validators.push(a.clone());
                viol.certificates.push((&anchor).into());
                out.push(viol);
            }
        }
    }
    out
}

fn check_anchor_paths(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::AnchorPaths;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        let Some(anchor) = last_anchor(v, params) else {
            continue;
        };
        for (a2, v2) in &s.validators {
            for c in v2.dag.iter() {
                if c.round >= anchor.round + 2 && !has_path(c, &anchor, &v2.dag) {
                    let mut viol = violation(
                        id,
                        format!(
                            "{a2}: {} has no path to {a}'s last anchor {}",
                            c.label(),
                            anchor.label()
                        ),
                    );
                    viol.validators.push(a.clone());
                    viol.validators.push(a2.clone());
                    viol.certificates.push(c.into());
                    viol.certificates.push((&anchor).into());
                    out.push(viol);
                }
            }
        }
    }
    out
}

fn is_prefix<T: PartialEq>(shorter: &[T], longer: &[T]) -> bool {
    shorter.len() <= longer.len() && shorter.iter().zip(longer).all(|(a, b)| a == b)
}

fn check_anchor_nonforking(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::AnchorNonforking;
    let mut out = Vec::new();
    let collected: Vec<(&Address, Vec<Certificate>)> = s
        .validators
        .iter()
        .map(|(a, v)| (a, collect_all_anchors(v, params)))
        .collect();
    for (i, (a1, seq1)) in collected.iter().enumerate() {
        for (a2, seq2) in &collected[i + 1..] {
            if !is_prefix(seq1, seq2) && !is_prefix(seq2, seq1) {
                let mut viol = violation(
                    id,
                    format!("anchor sequences of {a1} and {a2} diverge"),
                );
                viol.validators.push((*a1).clone());
                viol.validators.push((*a2).clone());
                out.push(viol);
            }
        }
    }
    out
}

fn check_committed_redundancy(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::CommittedRedundancy;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        match last_anchor(v, params) {
            None => {
                if !v.committed.is_empty() {
                    let mut viol = violation(
                        id,
                        format!("{a}: no last anchor but {} committed certificates", v.committed.len()),
                    );
                    viol.validators.push(a.clone());
                    out.push(viol);
                }
            }
            Some(anchor) => {
                let history: BTreeSet<Certificate> = v
                    .dag
                    .iter()
                    .filter(|c| has_path(&anchor, c, &v.dag))
                    .cloned()
                    .collect();
                if v.committed != history {
                    let mut viol = violation(
                        id,
                        format!(
                            "{a}: committed set differs from causal history of {}",
                            anchor.label()
                        ),
                    );
                    viol.validators.push(a.clone());
                    viol.certificates.push((&anchor).into());
                    out.push(viol);
                }
            }
        }
    }
    out
}

fn check_blockchain_redundancy(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::BlockchainRedundancy;
    let mut out = Vec::new();
    for (a, v) in &s.validators {
        let anchors = collect_all_anchors(v, params);
        let (chain, _) =
            extend_blockchain(&anchors, &v.dag, &Blockchain::default(), &BTreeSet::new());
        if chain != v.blockchain {
            let mut viol = violation(
                id,
                format!("{a}: blockchain differs from recalculation over committed anchors"),
            );
            viol.validators.push(a.clone());
            out.push(viol);
        }
    }
    out
}

fn check_blockchain_nonforking(s: &SystemState) -> Vec<Violation> {
    let id = InvariantId::BlockchainNonforking;
    let mut out = Vec::new();
    let validators: Vec<(&Address, &crate::types::ValidatorState)> = s.validators.iter().collect();
    for (i, (a1, v1)) in validators.iter().enumerate() {
        for (a2, v2) in &validators[i + 1..] {
            let b1 = &v1.blockchain.blocks;
            let b2 = &v2.blockchain.blocks;
            if !is_prefix(b1, b2) && !is_prefix(b2, b1) {
                let idx = b1
                    .iter()
                    .zip(b2.iter())
                    .position(|(x, y)| x != y)
                    .unwrap_or(b1.len().min(b2.len()));
                let mut viol = violation(
                    id,
                    format!("blockchains of {a1} and {a2} fork at block {idx}"),
                );
                viol.validators.push((*a1).clone());
                viol.validators.push((*a2).clone());
                viol.block_index = Some(idx);
                out.push(viol);
            }
        }
    }
    out
}

fn check_committee_agreement(s: &SystemState, params: &ProtocolParams) -> Vec<Violation> {
    let id = InvariantId::CommitteeAgreement;
    let mut out = Vec::new();
    let validators: Vec<(&Address, &crate::types::ValidatorState)> = s.validators.iter().collect();
    for (i, (a1, v1)) in validators.iter().enumerate() {
        for (a2, v2) in &validators[i + 1..] {
            let horizon = committee_horizon(
                last_block_round(&v1.blockchain).min(last_block_round(&v2.blockchain)),
                params,
            );
            for r in 1..=horizon {
                let w1 = active_committee_at(r, &v1.blockchain, params);
                let w2 = active_committee_at(r, &v2.blockchain, params);
                if let (Some(w1), Some(w2)) = (w1, w2) {
                    if w1 != w2 {
                        let mut viol = violation(
                            id,
                            format!("{a1} and {a2} disagree on the committee for round {r}"),
                        );
                        viol.validators.push((*a1).clone());
                        viol.validators.push((*a2).clone());
                        out.push(viol);
                    }
                }
            }
        }
    }
    out
}

/// Runs one invariant checker, returning every violation found.
pub fn check_invariant(
    id: InvariantId,
    s: &SystemState,
    params: &ProtocolParams,
) -> Vec<Violation> {
    match id {
        InvariantId::LastBlockRound => check_last_block_round(s),
        InvariantId::OrderedBlockRounds => check_ordered_block_rounds(s),
        InvariantId::EvenBlockRounds => check_even_block_rounds(s),
        InvariantId::BackwardClosure => check_backward_closure(s),
        InvariantId::SignerQuorum => check_signer_quorum(s, params),
        InvariantId::SignerRecords => check_signer_records(s).0,
        InvariantId::NoSelfEndorsement => check_no_self_endorsement(s),
        InvariantId::SignedNonequivocation => check_signed_nonequivocation(s),
        InvariantId::DagNonequivocation => check_dag_nonequivocation(s),
        InvariantId::SignedPreviousQuorum => check_signed_previous_quorum(s, params),
        InvariantId::DagPreviousQuorum => check_dag_previous_quorum(s, params),
        InvariantId::LastAnchorPresence => check_last_anchor_presence(s, params),
        InvariantId::LastAnchorVoters => check_last_anchor_voters(s, params),
        InvariantId::AnchorPaths => check_anchor_paths(s, params),
        InvariantId::AnchorNonforking => check_anchor_nonforking(s, params),
        InvariantId::CommittedRedundancy => check_committed_redundancy(s, params),
        InvariantId::BlockchainRedundancy => check_blockchain_redundancy(s, params),
        InvariantId::BlockchainNonforking => check_blockchain_nonforking(s),
        InvariantId::CommitteeAgreement => check_committee_agreement(s, params),
    }
}

/// How a violated invariant is classified in a report.
#[derive(Clone, Copy, PartialEq, Eq, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    /// The invariant holds.
    Pass,
    /// Violated, and the execution was not known fault-tolerant, so the
    /// violation is permitted by the model.
    Expected,
    /// Violated where it must hold.
    Failure,
}

/// Per-invariant outcome of a full check.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct InvariantStatus {
    pub invariant: InvariantId,
    pub severity: Severity,
    pub violations: Vec<Violation>,
}

/// Outcome of checking all 19 invariants on one state.
#[derive(Clone, PartialEq, Eq, Debug, Serialize, Deserialize)]
pub struct Report {
    /// Whether the caller vouched that the whole execution so far was
    /// fault-tolerant, making the conditional invariants mandatory.
    pub ft_known: bool,
    pub statuses: Vec<InvariantStatus>,
    pub signer_record_stats: SignerRecordStats,
}

impl Report {
    pub fn failures(&self) -> impl Iterator<Item = &InvariantStatus> {
        self.statuses
            .iter()
            .filter(|st| st.severity == Severity::Failure)
    }

    pub fn expected(&self) -> impl Iterator<Item = &InvariantStatus> {
        self.statuses
            .iter()
            .filter(|st| st.severity == Severity::Expected)
    }

    pub fn passed(&self) -> usize {
        self.statuses
            .iter()
            .filter(|st| st.severity == Severity::Pass)
            .count()
    }

    pub fn is_clean(&self) -> bool {
        self.failures().next().is_none()
    }

    /// One line per invariant plus a summary, as printed by the CLI.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for st in &self.statuses {
            let tag = match st.severity {
                Severity::Pass => "ok",
                Severity::Expected => "violated (permitted: execution not fault-tolerant)",
                Severity::Failure => "FAILED",
            };
            out.push_str(&format!("  {:<24} {}\n", st.invariant.name(), tag));
            for v in st.violations.iter().take(3) {
                out.push_str(&format!("      {}\n", v.detail));
            }
        }
        out.push_str(&format!(
            "{}/{} invariants hold\n",
            self.passed(),
            self.statuses.len()
        ));
        out
    }
}

/// Checks every invariant. Violations of the fault-tolerance-conditional
/// invariants are failures only when `ft_known` is true; the unconditional
/// eleven are failures whenever violated.
pub fn check_all(s: &SystemState, params: &ProtocolParams, ft_known: bool) -> Report {
    let (_, signer_record_stats) = check_signer_records(s);
    let statuses = InvariantId::ALL
        .iter()
        .map(|&id| {
            let violations = check_invariant(id, s, params);
            let severity = if violations.is_empty() {
                Severity::Pass
            } else if id.fault_tolerance_only() && !ft_known {
                Severity::Expected
            } else {
                Severity::Failure
            };
            InvariantStatus {
                invariant: id,
                severity,
                violations,
            }
        })
        .collect();
    Report {
        ft_known,
        statuses,
        signer_record_stats,
    }
}
