use std::collections::BTreeMap;
use std::sync::Arc;

use serde::Serialize;

use crate::bit::{Bit, BitSet};
use crate::bvbroadcast::AbvState;
use crate::coin::{CoinDeal, CoinState, ShareAuth};
use crate::message::Message;
use crate::process_set::{ProcessId, ProcessSet, SetFamily};
use crate::quorums::{is_kernel, AsymQuorumSystem};
use crate::simnet::{Effects, NodeMachine, NodeOutput};

/// Protocol switches separating the fixed protocol from the original one.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct VariantFlags {
    /// Run on FIFO links.
    pub fifo_links: bool,
    /// Re-evaluate `B` against live AUX state after the coin output.
    pub dynamic_b: bool,
    /// DECIDE messages with kernel relay, then halt.
    pub decide_amplification: bool,
}

impl VariantFlags {
    pub const FIXED: VariantFlags = VariantFlags {
        fifo_links: true,
        dynamic_b: true,
        decide_amplification: true,
    };
    pub const PODC14: VariantFlags = VariantFlags {
        fifo_links: false,
        dynamic_b: false,
        decide_amplification: false,
    };
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Fixed,
    Podc14,
}

impl Variant {
    pub fn flags(self) -> VariantFlags {
        match self {
            Variant::Fixed => VariantFlags::FIXED,
            Variant::Podc14 => VariantFlags::PODC14,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Fixed => "fixed",
            Variant::Podc14 => "podc14",
        }
    }
}

impl std::str::FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fixed" => Ok(Variant::Fixed),
            "podc14" => Ok(Variant::Podc14),
            other => Err(format!(
                "unknown variant `{other}` (expected fixed or podc14)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ConsensusEvent {
    AbvDelivered {
        round: u64,
        bit: Bit,
    },
    CoinReleased {
        round: u64,
    },
    CoinOutput {
        round: u64,
        value: Bit,
    },
    /// The coin-output guard passed with set `b`; the process moves to `round + 1`.
    CoinGuard {
        round: u64,
        b: BitSet,
        coin: Bit,
    },
    DecideSent {
        bit: Bit,
    },
    Decided {
        round: u64,
        bit: Bit,
    },
}

impl NodeOutput for ConsensusEvent {
    fn coin_released(&self) -> Option<u64> {
        match self {
            ConsensusEvent::CoinReleased { round } => Some(*round),
            _ => None,
        }
    }
}

type Fx = Effects<Message, ConsensusEvent>;

/// One process running randomized binary consensus.
pub struct ConsensusNode {
    me: ProcessId,
    n: usize,
    flags: VariantFlags,
    auth: ShareAuth,
    aq: Arc<AsymQuorumSystem>,
    deal: Arc<CoinDeal>,
    input: Bit,
    round: u64,
    values: BitSet,
    aux: Vec<BitSet>,
    /// Broadcast instances by round; past instances keep relaying.
    abv: BTreeMap<u64, AbvState>,
    coin: CoinState,
    coin_out: Option<Bit>,
    /// `B` fixed at release time when `dynamic_b` is off.
    static_b: Option<BitSet>,
    decided: Vec<Option<Bit>>,
    sentdecide: bool,
    decision: Option<(u64, Bit)>,
    halted: bool,
    future: BTreeMap<u64, Vec<(ProcessId, Message)>>,
}

impl ConsensusNode {
    pub fn new(
        me: ProcessId,
        input: Bit,
        aq: Arc<AsymQuorumSystem>,
        deal: Arc<CoinDeal>,
        flags: VariantFlags,
        auth: ShareAuth,
    ) -> Self {
        let n = aq.n();
        let coin = CoinState::new(me, 0, &deal);
        ConsensusNode {
            me,
            n,
            flags,
            auth,
            aq,
            deal,
            input,
            round: 0,
            values: BitSet::EMPTY,
            aux: vec![BitSet::EMPTY; n],
            abv: BTreeMap::new(),
            coin,
            coin_out: None,
            static_b: None,
            decided: vec![None; n],
            sentdecide: false,
            decision: None,
            halted: false,
            future: BTreeMap::new(),
        }
    }

    pub fn decision(&self) -> Option<(u64, Bit)> {
        self.decision
    }

    pub fn values(&self) -> BitSet {
        self.values
    }

    pub fn aux(&self, j: ProcessId) -> BitSet {
        self.aux[j]
    }

    fn quorums(&self) -> &SetFamily {
        self.aq.get(self.me)
    }

    fn abv_broadcast(&mut self, b: Bit, fx: &mut Fx) {
        let round = self.round;
        let n = self.n;
        if self
            .abv
            .entry(round)
            .or_insert_with(|| AbvState::new(n))
            .broadcast(b)
        {
            fx.send_all(Message::Value { round, bit: b });
        }
    }

    fn on_value(&mut self, from: ProcessId, round: u64, bit: Bit, fx: &mut Fx) {
        let n = self.n;
        let quorums = self.aq.clone();
        if round < self.round && !self.abv.contains_key(&round) {
            return;
        }
        let step = self
            .abv
            .entry(round)
            .or_insert_with(|| AbvState::new(n))
            .on_value(from, bit, quorums.get(self.me));
        if let Some(b) = step.echo {
            fx.send_all(Message::Value { round, bit: b });
        }
        if let Some(b) = step.deliver {
            if round == self.round {
                fx.output(ConsensusEvent::AbvDelivered { round, bit: b });
                self.values.insert(b);
                fx.send_all(Message::Aux { round, bit: b });
            }
        }
    }

    fn on_decide(&mut self, from: ProcessId, bit: Bit, fx: &mut Fx) {
        if !self.flags.decide_amplification || self.decided[from].is_some() {
            return;
        }
        self.decided[from] = Some(bit);
        let senders = ProcessSet::from_indices(
            self.n,
            (0..self.n).filter(|&j| self.decided[j] == Some(bit)),
        );
        if !self.sentdecide && is_kernel(&senders, self.quorums()) {
            self.send_decide(bit, fx);
        }
        if self.quorums().has_member_within(&senders) {
            self.record_decision(bit, fx);
            self.halted = true;
        }
    }

    fn send_decide(&mut self, bit: Bit, fx: &mut Fx) {
        self.sentdecide = true;
        fx.send_all(Message::Decide { bit });
        fx.output(ConsensusEvent::DecideSent { bit });
    }

    fn record_decision(&mut self, bit: Bit, fx: &mut Fx) {
        if self.decision.is_none() {
            self.decision = Some((self.round, bit));
            fx.output(ConsensusEvent::Decided {
                round: self.round,
                bit,
            });
        }
    }

    /// Senders whose AUX set is non-empty and inside `values`.
    fn aux_within_values(&self) -> ProcessSet {
        ProcessSet::from_indices(
            self.n,
            (0..self.n).filter(|&j| !self.aux[j].is_empty() && self.aux[j].is_subset(self.values)),
        )
    }

    /// A non-empty `B ⊆ values` such that some quorum reported exactly `B`.
    fn uniform_quorum_set(&self) -> Option<BitSet> {
        BitSet::nonempty().into_iter().find(|b| {
            b.is_subset(self.values) && {
                let s =
                    ProcessSet::from_indices(self.n, (0..self.n).filter(|&j| self.aux[j] == *b));
                self.quorums().has_member_within(&s)
            }
        })
    }

    fn release(&mut self, fx: &mut Fx) {
        for (to, m) in self.coin.release(&self.deal) {
            fx.send_to(to, m);
        }
        fx.output(ConsensusEvent::CoinReleased { round: self.round });
    }

    /// Fires every enabled guard until none is.
    fn progress(&mut self, fx: &mut Fx) {
        while !self.halted {
            if !self.coin.released() {
                if self.flags.dynamic_b {
                    if self.quorums().has_member_within(&self.aux_within_values()) {
                        self.release(fx);
                        continue;
                    }
                } else if let Some(b) = self.uniform_quorum_set() {
                    self.static_b = Some(b);
                    self.release(fx);
                    continue;
                }
            }
            let Some(s) = self.coin_out else { break };
            let b = if self.flags.dynamic_b {
                self.uniform_quorum_set()
            } else if self.coin.released() {
                self.static_b
            } else {
                None
            };
            let Some(b) = b else { break };
            self.advance(b, s, fx);
        }
    }

    fn advance(&mut self, b: BitSet, s: Bit, fx: &mut Fx) {
        fx.output(ConsensusEvent::CoinGuard {
            round: self.round,
            b,
            coin: s,
        });
        self.round += 1;
        let next = match b.as_single() {
            Some(v) => {
                if v == s {
                    if self.flags.decide_amplification {
                        if !self.sentdecide {
                            self.send_decide(v, fx);
                        }
                    } else {
                        self.record_decision(v, fx);
                    }
                }
                v
            }
            None => s,
        };
        self.values = BitSet::EMPTY;
        self.aux = vec![BitSet::EMPTY; self.n];
        self.coin = CoinState::new(self.me, self.round, &self.deal);
        self.coin_out = None;
        self.static_b = None;
        self.abv_broadcast(next, fx);
        let r = self.round;
        // past instances keep relaying VALUE for two rounds
        self.abv.retain(|&k, _| k + 2 >= r);
        if let Some(buffered) = self.future.remove(&r) {
            for (from, m) in buffered {
                self.handle(from, m, fx);
            }
        }
    }

    fn handle(&mut self, from: ProcessId, msg: Message, fx: &mut Fx) {
        if let Some(r) = msg.round() {
            if r > self.round {
                self.future.entry(r).or_default().push((from, msg));
                return;
            }
        }
        match msg {
            Message::Value { round, bit } => self.on_value(from, round, bit, fx),
            Message::Aux { round, bit } if round == self.round => {
                self.aux[from].insert(bit);
            }
            Message::Coin {
                round,
                quorum,
                share,
            } if round == self.round => {
                if let Some(s) = self
                    .coin
                    .on_coin(from, quorum, share, &self.deal, self.auth)
                {
                    self.coin_out = Some(s);
                    fx.output(ConsensusEvent::CoinOutput { round, value: s });
                }
            }
            Message::Decide { bit } => self.on_decide(from, bit, fx),
            _ => {}
        }
    }
}

impl NodeMachine for ConsensusNode {
    type Msg = Message;
    type Output = ConsensusEvent;

    fn start(&mut self, fx: &mut Fx) {
        self.abv_broadcast(self.input, fx);
        self.progress(fx);
    }

    fn on_message(&mut self, from: ProcessId, msg: Message, fx: &mut Fx) {
        if self.halted {
            return;
        }
        self.handle(from, msg, fx);
        self.progress(fx);
    }

    fn halted(&self) -> bool {
        self.halted
    }

    fn done(&self) -> bool {
        self.halted || self.decision.is_some()
    }

    fn round(&self) -> u64 {
        self.round
    }
}
