//! Reference systems shared by tests, the CLI and the acceptance suite.

use crate::dsl::{parse_system, Roster};
use crate::quorums::AsymFailProneSystem;

/// Fail-prone rows of the seven-process asymmetric system.
pub const SEVEN_PROCESS_ROWS: [&str; 7] = [
    "theta(2,{p2,p4,p5}) * {p6} * {p7}",
    "theta(2,{p3,p4,p5}) * {p6} * {p7}",
    "theta(2,{p1,p4,p5}) * {p6} * {p7}",
    "theta(1,{p1,p2,p3,p5}) * {p6} * {p7}",
    "theta(1,{p1,p2,p3,p4}) * {p6} * {p7}",
    "{p1,p3,p7}",
    "{p3,p4,p5}",
];

/// The seven-process asymmetric system over roster `p1..p7`.
pub fn seven_process() -> AsymFailProneSystem {
    parse_system(&SEVEN_PROCESS_ROWS, &Roster::numbered(7)).expect("fixture parses")
}
