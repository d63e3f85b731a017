//! Asymmetric Byzantine quorum systems and randomized binary consensus.
//!
//! The crate covers the set combinatorics ([`quorums`], [`dsl`]), a
//! deterministic network simulator ([`simnet`]) and the protocol stack
//! built on it: a dealer-based common coin ([`coin`]), binary validated
//! broadcast ([`bvbroadcast`]) and consensus ([`consensus`]).

pub mod bit;
pub mod bvbroadcast;
pub mod coin;
pub mod consensus;
pub mod dsl;
pub mod error;
pub mod fixtures;
pub mod message;
pub mod process_set;
pub mod quorums;
pub mod simnet;

pub use bit::{Bit, BitSet};
pub use error::{Error, Result};
pub use process_set::{ProcessId, ProcessSet, SetFamily};
