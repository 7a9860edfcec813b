//! Executable model of a DAG-based BFT consensus protocol with dynamic
//! stake, together with a simulation and invariant-checking harness.
//!
//! Validators build certificate DAGs round by round and independently
//! linearize them into blockchains; committees are derived from bonding
//! transactions in those blockchains via a lookback window, and committee
//! stake weighs every quorum and election decision. The model is a labeled
//! transition system: [`transition`] defines which events are possible in a
//! state and the unique successor each produces, and [`invariant`] provides
//! executable checkers for the safety properties, up to blockchain
//! nonforking. The [`harness`] runs seeded random, adversarial, scripted,
//! and exhaustively enumerated executions against those checkers.

pub mod anchor;
pub mod committee;
pub mod dag;
pub mod harness;
pub mod invariant;
pub mod transition;
pub mod types;

pub use committee::ProtocolParams;
pub use types::{
    initial_state, Address, Block, Blockchain, Certificate, Committee, ConfigError, Dag,
    EndorsedPair, Event, EventKind, Message, Round, Stake, StakeSum, SystemState, Transaction,
    ValidatorState,
};
