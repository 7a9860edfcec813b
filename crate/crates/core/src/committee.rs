//! Committee calculus: evolving committees from bonding transactions,
//! bonded/active committee lookup with lookback, and stake thresholds.
//!
//! A committee is never global state. Each validator derives, from its own
//! blockchain, the bonded committee at a round and from that the active
//! committee (the bonded one a fixed lookback earlier). "Cannot calculate
//! yet" is an ordinary value (`None`), not an error: transition rules treat
//! it as the event not being enabled.

use crate::types::{Address, Block, Blockchain, Committee, Round, StakeSum, Transaction};

/// Protocol parameters shared by all validators: the genesis committee and
/// the lookback distance (>= 1).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProtocolParams {
    pub genesis_committee: Committee,
    pub lookback: u64,
}

impl ProtocolParams {
    pub fn new(genesis_committee: Committee, lookback: u64) -> Self {
        debug_assert!(lookback >= 1);
        ProtocolParams {
            genesis_committee,
            lookback,
        }
    }
}

/// Round of the newest block, or 0 for the empty chain.
pub fn last_block_round(chain: &Blockchain) -> Round {
    chain.blocks.last().map_or(0, |b| b.round)
}

/// Applies one transaction to a committee: bond inserts or tops up, unbond
/// removes, anything else is the identity.
pub fn apply_transaction(committee: &Committee, tx: &Transaction) -> Committee {
    let mut members = committee.members.clone();
    match tx {
        Transaction::Bond { validator, stake } => {
            members
                .entry(validator.clone())
                .and_modify(|k| *k = k.checked_add(*stake).expect("stake overflow"))
                .or_insert(*stake);
        }
        Transaction::Unbond { validator } => {
            members.remove(validator);
        }
        Transaction::Other { .. } => {}
    }
    Committee { members }
}

/// Folds `apply_transaction` over all transactions of all blocks, in order.
pub fn apply_blocks(committee: &Committee, blocks: &[Block]) -> Committee {
    let mut w = committee.clone();
    for block in blocks {
        for tx in &block.transactions {
            w = apply_transaction(&w, tx);
        }
    }
    w
}

/// The prefix of the chain that determines the bonded committee at `round`:
/// blocks are dropped from the right while the rightmost round is >= `round`.
/// For well-formed chains (strictly increasing rounds) this is the longest
/// prefix of blocks with round < `round`.
fn bonded_prefix(round: Round, chain: &Blockchain) -> &[Block] {
    let mut end = chain.blocks.len();
    while end > 0 && chain.blocks[end - 1].round >= round {
        end -= 1;
    }
    &chain.blocks[..end]
}

/// Committee bonded at `round` given `chain`, or `None` when the chain does
/// not yet determine it (i.e. `round > last_block_round(chain) + 2`).
pub fn bonded_committee_at(
    round: Round,
    chain: &Blockchain,
    params: &ProtocolParams,
) -> Option<Committee> {
    if round > last_block_round(chain) + 2 {
        return None;
    }
    Some(apply_blocks(
        &params.genesis_committee,
        bonded_prefix(round, chain),
    ))
}

/// Committee in charge of `round`: the genesis committee for the first
/// `lookback` rounds, then the committee bonded `lookback` rounds earlier.
pub fn active_committee_at(
    round: Round,
    chain: &Blockchain,
    params: &ProtocolParams,
) -> Option<Committee> {
    if round <= params.lookback {
        Some(params.genesis_committee.clone())
    } else {
        bonded_committee_at(round - params.lookback, chain, params)
    }
}

/// Sum of all member stakes.
pub fn total_stake(committee: &Committee) -> StakeSum {
    committee.members.values().map(|&k| k as StakeSum).sum()
}

/// Largest stake amount strictly below a third of the total; 0 for the empty
/// committee. Equals `floor((total - 1) / 3)` for non-zero totals.
pub fn max_faulty_stake(committee: &Committee) -> StakeSum {
    let total = total_stake(committee);
    if total == 0 {
        0
    } else {
        (total - 1) / 3
    }
}

/// Stake threshold for quorum decisions: total minus max faulty.
pub fn quorum_stake(committee: &Committee) -> StakeSum {
    total_stake(committee) - max_faulty_stake(committee)
}

/// Sum of the stakes of the given members, or `None` if any address is not a
/// committee member (distinct from a zero sum).
pub fn members_stake<'a>(
    addrs: impl IntoIterator<Item = &'a Address>,
    committee: &Committee,
) -> Option<StakeSum> {
    let mut sum: StakeSum = 0;
    for a in addrs {
        sum += committee.stake_of(a)? as StakeSum;
    }
    Some(sum)
}

/// Whether `addrs` is a quorum at `round`: the active committee must be
/// calculable, contain every address, and their stake must reach the quorum
/// threshold. An uncalculable committee yields `false`.
pub fn is_quorum(
    addrs: &std::collections::BTreeSet<Address>,
    round: Round,
    chain: &Blockchain,
    params: &ProtocolParams,
) -> bool {
    match active_committee_at(round, chain, params) {
        Some(w) => match members_stake(addrs, &w) {
            Some(stake) => stake >= quorum_stake(&w),
            None => false,
        },
        None => false,
    }
}
