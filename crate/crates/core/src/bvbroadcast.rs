//! Asymmetric binary validated broadcast.
//!
//! A process echoes a bit once the senders of that bit form a kernel for it
//! and delivers the bit once they contain one of its quorums.

use std::sync::Arc;

use serde::Serialize;

use crate::bit::{Bit, BitSet};
use crate::message::Message;
use crate::process_set::{ProcessId, ProcessSet, SetFamily};
use crate::quorums::is_kernel;
use crate::simnet::{Effects, NodeMachine, NodeOutput};

/// Broadcast state of one process for one instance.
#[derive(Clone, Debug)]
pub struct AbvState {
    sent: [bool; 2],
    senders: [ProcessSet; 2],
    delivered: [bool; 2],
}

/// Reaction to one VALUE message.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct AbvStep {
    /// Send VALUE with this bit to all.
    pub echo: Option<Bit>,
    pub deliver: Option<Bit>,
}

impl AbvState {
    pub fn new(n: usize) -> Self {
        AbvState {
            sent: [false; 2],
            senders: [ProcessSet::empty(n); 2],
            delivered: [false; 2],
        }
    }

    /// Whether VALUE(`b`) should go out; false if already sent.
    pub fn broadcast(&mut self, b: Bit) -> bool {
        !std::mem::replace(&mut self.sent[b.index()], true)
    }

    pub fn on_value(&mut self, from: ProcessId, b: Bit, quorums: &SetFamily) -> AbvStep {
        let i = b.index();
        let mut step = AbvStep::default();
        if self.senders[i].contains(from) {
            return step;
        }
        self.senders[i].insert(from);
        if !self.sent[i] && is_kernel(&self.senders[i], quorums) {
            self.sent[i] = true;
            step.echo = Some(b);
        }
        if !self.delivered[i] && quorums.has_member_within(&self.senders[i]) {
            self.delivered[i] = true;
            step.deliver = Some(b);
        }
        step
    }

    /// Bits received from `j`.
    pub fn values(&self, j: ProcessId) -> BitSet {
        let mut s = BitSet::EMPTY;
        for b in Bit::BOTH {
            if self.senders[b.index()].contains(j) {
                s.insert(b);
            }
        }
        s
    }

    pub fn senders(&self, b: Bit) -> ProcessSet {
        self.senders[b.index()]
    }

    pub fn delivered(&self) -> BitSet {
        let mut s = BitSet::EMPTY;
        for b in Bit::BOTH {
            if self.delivered[b.index()] {
                s.insert(b);
            }
        }
        s
    }

    pub fn has_sent(&self, b: Bit) -> bool {
        self.sent[b.index()]
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AbvDelivered {
    pub bit: Bit,
}

impl NodeOutput for AbvDelivered {}

/// A single broadcast instance as a standalone machine (round tag 0).
pub struct AbvNode {
    quorums: Arc<SetFamily>,
    state: AbvState,
    inputs: BitSet,
}

impl AbvNode {
    pub fn new(n: usize, quorums: Arc<SetFamily>, inputs: BitSet) -> Self {
        AbvNode {
            quorums,
            state: AbvState::new(n),
            inputs,
        }
    }

    pub fn state(&self) -> &AbvState {
        &self.state
    }
}

impl NodeMachine for AbvNode {
    type Msg = Message;
    type Output = AbvDelivered;

    fn start(&mut self, fx: &mut Effects<Message, AbvDelivered>) {
        for b in self.inputs.iter() {
            if self.state.broadcast(b) {
                fx.send_all(Message::Value { round: 0, bit: b });
            }
        }
    }

    fn on_message(
        &mut self,
        from: ProcessId,
        msg: Message,
        fx: &mut Effects<Message, AbvDelivered>,
    ) {
        if let Message::Value { round: 0, bit } = msg {
            let step = self.state.on_value(from, bit, &self.quorums);
            if let Some(b) = step.echo {
                fx.send_all(Message::Value { round: 0, bit: b });
            }
            if let Some(b) = step.deliver {
                fx.output(AbvDelivered { bit: b });
            }
        }
    }
}
