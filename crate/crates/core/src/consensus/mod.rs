//! Randomized binary consensus over asymmetric quorums.

pub mod adversary;
pub mod attack;
pub mod harness;
mod node;

pub use adversary::{CoinPeeker, DecideForger, Equivocator, Gated, Strategy};
pub use attack::AttackScript;
pub use harness::{
    build_attack_scenario, run_attack, AttackOutcome, ConsensusTrace, Decision, RunReport,
    Scenario, SetMismatch, Violation, ATTACK_ROUNDS,
};
pub use node::{ConsensusEvent, ConsensusNode, Variant, VariantFlags};
