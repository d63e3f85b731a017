//! Wire messages of the protocol stack.

use serde::{Deserialize, Serialize};

use crate::bit::Bit;
use crate::process_set::ProcessId;
use crate::simnet::Payload;

/// The `index`-th quorum in the quorum system of `owner`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuorumId {
    pub owner: ProcessId,
    pub index: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Value {
        round: u64,
        bit: Bit,
    },
    Aux {
        round: u64,
        bit: Bit,
    },
    Coin {
        round: u64,
        quorum: QuorumId,
        share: Bit,
    },
    /// Carries no round.
    Decide {
        bit: Bit,
    },
}

impl Message {
    pub fn round(&self) -> Option<u64> {
        match self {
            Message::Value { round, .. }
            | Message::Aux { round, .. }
            | Message::Coin { round, .. } => Some(*round),
            Message::Decide { .. } => None,
        }
    }
}

impl Payload for Message {
    fn round_tag(&self) -> Option<u64> {
        self.round()
    }

    fn is_coin(&self) -> bool {
        matches!(self, Message::Coin { .. })
    }
}
