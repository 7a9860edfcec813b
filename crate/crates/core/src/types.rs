//! Domain types of the protocol model: addresses, rounds, stake, transactions,
//! blocks, certificates, DAGs, validator states, system states, and events.
//!
//! All types are immutable values with structural equality; "mutation" always
//! builds a new value. Collections use `BTreeMap`/`BTreeSet` so that iteration
//! order, serialization, and digests are deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};

/// Validator address. Opaque text standing in for a public key; ordering is
/// lexicographic on the text and is the total order used everywhere a
/// deterministic tie-break is needed.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Address(pub String);

impl Address {
    pub fn new(name: impl Into<String>) -> Self {
        Address(name.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl fmt::Debug for Address {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl From<&str> for Address {
    fn from(s: &str) -> Self {
        Address(s.to_string())
    }
}

/// Round number. Protocol rounds start at 1; the value 0 appears only where a
/// "round or none yet" is meant (e.g. the last committed round of a fresh
/// validator).
pub type Round = u64;

/// Stake held by one committee member. Always >= 1 for committee entries.
pub type Stake = u64;

/// Sum of stakes. Wider than `Stake` so that totals over arbitrary committees
/// never wrap.
pub type StakeSum = u128;

/// A transaction. Bonding and unbonding drive committee changes; everything
/// else is opaque to the protocol.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Transaction {
    Bond { validator: Address, stake: Stake },
    Unbond { validator: Address },
    Other { payload: String },
}

/// A block: the even round it was generated for, plus its transactions in
/// commit order.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Block {
    pub round: Round,
    pub transactions: Vec<Transaction>,
}

/// A validator's blockchain: blocks ordered oldest first.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Blockchain {
    pub blocks: Vec<Block>,
}

impl Blockchain {
    pub fn new(blocks: Vec<Block>) -> Self {
        Blockchain { blocks }
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }
}

/// A DAG vertex. `previous` holds the authors of the referenced certificates
/// at the round just before; `endorsers` are the validators whose signatures
/// back the certificate besides the author's.
///
/// Equality is structural over all five fields. The order is
/// (round, author, transactions, previous, endorsers): round-major so that
/// sorting a set of certificates yields the canonical commit order.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct Certificate {
    pub author: Address,
    pub round: Round,
    pub transactions: Vec<Transaction>,
    pub previous: BTreeSet<Address>,
    pub endorsers: BTreeSet<Address>,
}

impl Ord for Certificate {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (
            self.round,
            &self.author,
            &self.transactions,
            &self.previous,
            &self.endorsers,
        )
            .cmp(&(
                other.round,
                &other.author,
                &other.transactions,
                &other.previous,
                &other.endorsers,
            ))
    }
}

impl PartialOrd for Certificate {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Certificate {
    /// The author together with the endorsers.
    pub fn signers(&self) -> BTreeSet<Address> {
        let mut s = self.endorsers.clone();
        s.insert(self.author.clone());
        s
    }

    /// Short "author@round" label used in reports and DOT exports.
    pub fn label(&self) -> String {
        format!("{}@{}", self.author, self.round)
    }
}

/// An (author, round) pair recorded by an endorser until the corresponding
/// certificate is received.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct EndorsedPair {
    pub author: Address,
    pub round: Round,
}

/// A certificate in flight to one destination validator.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
pub struct Message {
    pub certificate: Certificate,
    pub destination: Address,
}

/// A set of certificates with derived lookup indexes.
///
/// The plain set is authoritative: equality, ordering, hashing, and
/// serialization all go through it. The indexes (by author+round and by
/// round) are rebuilt on construction and kept in lockstep on insert.
#[derive(Clone, Debug, Default)]
pub struct Dag {
    certs: BTreeSet<Certificate>,
    by_author_round: BTreeMap<(Address, Round), Vec<Certificate>>,
    by_round: BTreeMap<Round, Vec<Certificate>>,
}

impl Dag {
    pub fn new() -> Self {
        Dag::default()
    }

    /// Inserts a certificate; a no-op if an equal certificate is present.
    pub fn insert(&mut self, cert: Certificate) {
        if self.certs.insert(cert.clone()) {
            let slot = self
                .by_author_round
                .entry((cert.author.clone(), cert.round))
                .or_default();
            let pos = slot.partition_point(|c| c < &cert);
            slot.insert(pos, cert.clone());
            let slot = self.by_round.entry(cert.round).or_default();
            let pos = slot.partition_point(|c| c < &cert);
            slot.insert(pos, cert);
        }
        debug_assert!(self.indexes_consistent());
    }

    pub fn contains(&self, cert: &Certificate) -> bool {
        self.certs.contains(cert)
    }

    pub fn len(&self) -> usize {
        self.certs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.certs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Certificate> {
        self.certs.iter()
    }

    /// Certificates at the given round, in certificate order.
    pub fn certs_with_round(&self, round: Round) -> &[Certificate] {
        self.by_round.get(&round).map_or(&[], Vec::as_slice)
    }

    /// Certificates with the given author and round, least first. More than
    /// one element means the DAG holds equivocating certificates, which can
    /// only happen in states outside the fault-tolerance assumptions.
    pub fn certs_with_author_round(&self, author: &Address, round: Round) -> &[Certificate] {
        self.by_author_round
            .get(&(author.clone(), round))
            .map_or(&[], Vec::as_slice)
    }

    /// The unique certificate with the given author and round, if any. Under
    /// equivocation the least certificate is returned so callers stay
    /// deterministic; `certs_with_author_round` exposes the ambiguity.
    pub fn cert_with_author_round(&self, author: &Address, round: Round) -> Option<&Certificate> {
        self.certs_with_author_round(author, round).first()
    }

    fn indexes_consistent(&self) -> bool {
        let n: usize = self.by_author_round.values().map(Vec::len).sum();
        let m: usize = self.by_round.values().map(Vec::len).sum();
        n == self.certs.len()
            && m == self.certs.len()
            && self.by_author_round.iter().all(|((a, r), cs)| {
                cs.iter()
                    .all(|c| &c.author == a && c.round == *r && self.certs.contains(c))
            })
    }
}

impl PartialEq for Dag {
    fn eq(&self, other: &Self) -> bool {
        self.certs == other.certs
    }
}

impl Eq for Dag {}

impl std::hash::Hash for Dag {
    fn hash<H: std::hash::Hasher>(&self, state: &mut H) {
        self.certs.hash(state);
    }
}

impl FromIterator<Certificate> for Dag {
    fn from_iter<I: IntoIterator<Item = Certificate>>(iter: I) -> Self {
        let mut dag = Dag::new();
        for c in iter {
            dag.insert(c);
        }
        dag
    }
}

impl Serialize for Dag {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.certs.iter())
    }
}

impl<'de> Deserialize<'de> for Dag {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let certs = Vec::<Certificate>::deserialize(deserializer)?;
        Ok(certs.into_iter().collect())
    }
}

/// The full state of one correct validator.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct ValidatorState {
    pub round: Round,
    pub dag: Dag,
    pub endorsed: BTreeSet<EndorsedPair>,
    /// Round of the latest committed block; 0 before the first commit.
    pub last: Round,
    pub blockchain: Blockchain,
    pub committed: BTreeSet<Certificate>,
}

impl ValidatorState {
    pub fn initial() -> Self {
        ValidatorState {
            round: 1,
            dag: Dag::new(),
            endorsed: BTreeSet::new(),
            last: 0,
            blockchain: Blockchain::default(),
            committed: BTreeSet::new(),
        }
    }
}

/// A committee: finite map from member address to stake (each >= 1).
/// Iteration follows the address order.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Committee {
    pub members: BTreeMap<Address, Stake>,
}

impl Committee {
    pub fn new(members: BTreeMap<Address, Stake>) -> Self {
        debug_assert!(members.values().all(|&k| k >= 1));
        Committee { members }
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, a: &Address) -> bool {
        self.members.contains_key(a)
    }

    pub fn stake_of(&self, a: &Address) -> Option<Stake> {
        self.members.get(a).copied()
    }

    /// Member addresses in address order.
    pub fn addresses(&self) -> impl Iterator<Item = &Address> {
        self.members.keys()
    }
}

impl FromIterator<(Address, Stake)> for Committee {
    fn from_iter<I: IntoIterator<Item = (Address, Stake)>>(iter: I) -> Self {
        Committee::new(iter.into_iter().collect())
    }
}

/// The whole system: one state per correct validator, plus the set of
/// messages sent but not yet received. The validator map's domain is the
/// fixed set of correct validators and never changes across transitions.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
pub struct SystemState {
    pub validators: BTreeMap<Address, ValidatorState>,
    pub network: BTreeSet<Message>,
}

impl SystemState {
    pub fn correct_addresses(&self) -> impl Iterator<Item = &Address> {
        self.validators.keys()
    }

    pub fn is_correct(&self, a: &Address) -> bool {
        self.validators.contains_key(a)
    }

    pub fn validator(&self, a: &Address) -> Option<&ValidatorState> {
        self.validators.get(a)
    }
}

/// One protocol event. The transition relation gives each kind an
/// enabledness predicate and a deterministic successor.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "snake_case")]
pub enum Event {
    Create(Certificate),
    Accept(Message),
    Advance(Address),
    Commit(Address),
}

impl Event {
    pub fn kind(&self) -> EventKind {
        match self {
            Event::Create(_) => EventKind::Create,
            Event::Accept(_) => EventKind::Accept,
            Event::Advance(_) => EventKind::Advance,
            Event::Commit(_) => EventKind::Commit,
        }
    }
}

impl fmt::Display for Event {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Event::Create(c) => write!(f, "create({})", c.label()),
            Event::Accept(m) => write!(f, "accept({} -> {})", m.certificate.label(), m.destination),
            Event::Advance(a) => write!(f, "advance({a})"),
            Event::Commit(a) => write!(f, "commit({a})"),
        }
    }
}

/// Event kinds, used for scheduler weighting.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Create,
    Accept,
    Advance,
    Commit,
}

impl EventKind {
    pub const ALL: [EventKind; 4] = [
        EventKind::Create,
        EventKind::Accept,
        EventKind::Advance,
        EventKind::Commit,
    ];
}

/// Errors raised when a configuration is structurally invalid.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("the set of correct validators must not be empty")]
    NoCorrectValidators,
    #[error("committee stake for {0} must be at least 1")]
    ZeroStake(Address),
    #[error("lookback must be at least 1")]
    ZeroLookback,
    #[error("validator {0} is listed as both correct and faulty")]
    CorrectAndFaulty(Address),
    #[error("scheduler weights must not all be zero")]
    AllZeroWeights,
    #[error("unknown adversary strategy: {0}")]
    UnknownStrategy(String),
}

/// The initial system state for a given set of correct validators: every
/// validator at round 1 with all components empty, and an empty network.
pub fn initial_state(
    correct: impl IntoIterator<Item = Address>,
) -> Result<SystemState, ConfigError> {
    let validators: BTreeMap<Address, ValidatorState> = correct
        .into_iter()
        .map(|a| (a, ValidatorState::initial()))
        .collect();
    if validators.is_empty() {
        return Err(ConfigError::NoCorrectValidators);
    }
    Ok(SystemState {
        validators,
        network: BTreeSet::new(),
    })
}
