//! Execution generation and exploration: scenarios, seeded random runs with
//! trace recording and replay, Byzantine adversary strategies, bounded
//! exhaustive exploration, and trace minimization.

pub mod explore;
pub mod generate;
pub mod minimize;
pub mod run;
pub mod scenario;
pub mod scripts;

pub use explore::{explore, ExplorationReport, PathViolation};
pub use generate::{adversary_propose, enabled_events, transaction_batch};
pub use minimize::{minimize, MinimizeOutcome};
pub use run::{
    replay, run_batch, run_batch_sequential, run_random, run_with, state_digest, ReplayMismatch,
    Trace, TraceParseError, TraceStep,
};
pub use scenario::{AdversaryStrategy, DynamicStakePolicy, Scenario, SchedulerWeights};
