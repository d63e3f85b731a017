//! Byzantine strategies for the faulty processes.

use std::cell::Cell;
use std::collections::BTreeSet;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bit::Bit;
use crate::coin::FaultyKeys;
use crate::message::{Message, QuorumId};
use crate::process_set::ProcessId;
use crate::simnet::{Adversary, Dest, Injection, NetView, Silent};

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Silent,
    /// Random VALUE, AUX and COIN bits, different per receiver.
    Equivocate,
    /// Honest coin shares, then the opposite of the revealed coin.
    CoinPeek,
    /// DECIDE for a fixed bit from every faulty process.
    ForgeDecide,
}

impl Strategy {
    /// The strategies of the randomized correctness batches.
    pub const RANDOMIZED: [Strategy; 3] =
        [Strategy::Silent, Strategy::Equivocate, Strategy::CoinPeek];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Silent => "silent",
            Strategy::Equivocate => "equivocate",
            Strategy::CoinPeek => "coin_peek",
            Strategy::ForgeDecide => "forge_decide",
        }
    }

    pub fn build(self, keys: FaultyKeys, seed: u64) -> Box<dyn Adversary<Message>> {
        match self {
            Strategy::Silent => Box::new(Silent),
            Strategy::Equivocate => Box::new(Equivocator::new(keys, seed)),
            Strategy::CoinPeek => Box::new(CoinPeeker::new(keys)),
            Strategy::ForgeDecide => {
                Box::new(DecideForger::new(keys, Bit::from_bool(seed % 2 == 1)))
            }
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "silent" => Ok(Strategy::Silent),
            "equivocate" => Ok(Strategy::Equivocate),
            "coin_peek" => Ok(Strategy::CoinPeek),
            "forge_decide" => Ok(Strategy::ForgeDecide),
            other => Err(format!("unknown adversary `{other}`")),
        }
    }
}

fn correct_processes(view: &NetView<'_, Message>) -> Vec<ProcessId> {
    let faulty = view.faulty();
    (0..view.n()).filter(|p| !faulty.contains(*p)).collect()
}

fn leading_round(view: &NetView<'_, Message>) -> u64 {
    correct_processes(view)
        .into_iter()
        .map(|p| view.rounds()[p])
        .max()
        .unwrap_or(0)
}

/// Each time the leading correct round advances, every faulty process sends
/// each correct process a random VALUE, a random AUX and a random share for
/// every quorum of the receiver it belongs to.
pub struct Equivocator {
    keys: FaultyKeys,
    rng: ChaCha8Rng,
    last: Option<u64>,
}

impl Equivocator {
    pub fn new(keys: FaultyKeys, seed: u64) -> Self {
        Equivocator {
            keys,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x005e_ede9_u64),
            last: None,
        }
    }

    fn bit(&mut self) -> Bit {
        Bit::from_bool(self.rng.gen())
    }
}

impl Adversary<Message> for Equivocator {
    fn on_step(&mut self, view: &NetView<'_, Message>) -> Vec<Injection<Message>> {
        let round = leading_round(view);
        if self.last.is_some_and(|l| l >= round) {
            return Vec::new();
        }
        self.last = Some(round);
        let mut out = Vec::new();
        let aq = self.keys.quorums().clone();
        for f in self.keys.faulty().iter() {
            for c in correct_processes(view) {
                let to = Dest::To(c);
                out.push(Injection {
                    from: f,
                    to,
                    msg: Message::Value {
                        round,
                        bit: self.bit(),
                    },
                });
                out.push(Injection {
                    from: f,
                    to,
                    msg: Message::Aux {
                        round,
                        bit: self.bit(),
                    },
                });
                for (index, q) in aq.get(c).iter().enumerate() {
                    if q.contains(f) {
                        let quorum = QuorumId { owner: c, index };
                        out.push(Injection {
                            from: f,
                            to,
                            msg: Message::Coin {
                                round,
                                quorum,
                                share: self.bit(),
                            },
                        });
                    }
                }
            }
        }
        out
    }
}

/// Releases honest shares as soon as any correct process releases, reads the
/// coin, and pushes the opposite value into the current and next round.
pub struct CoinPeeker {
    keys: FaultyKeys,
    handled: BTreeSet<u64>,
}

impl CoinPeeker {
    pub fn new(keys: FaultyKeys) -> Self {
        CoinPeeker {
            keys,
            handled: BTreeSet::new(),
        }
    }
}

impl Adversary<Message> for CoinPeeker {
    fn on_step(&mut self, view: &NetView<'_, Message>) -> Vec<Injection<Message>> {
        let fresh: Vec<u64> = view
            .released_rounds()
            .iter()
            .copied()
            .filter(|r| !self.handled.contains(r))
            .collect();
        let mut out = Vec::new();
        for round in fresh {
            self.handled.insert(round);
            let Some(s) = view.coin(round) else { continue };
            let not_s = !s;
            for f in self.keys.faulty().iter() {
                for (to, msg) in self.keys.release_messages(round, f) {
                    out.push(Injection {
                        from: f,
                        to: Dest::To(to),
                        msg,
                    });
                }
                for c in correct_processes(view) {
                    let to = Dest::To(c);
                    out.push(Injection {
                        from: f,
                        to,
                        msg: Message::Value { round, bit: not_s },
                    });
                    out.push(Injection {
                        from: f,
                        to,
                        msg: Message::Aux { round, bit: not_s },
                    });
                    out.push(Injection {
                        from: f,
                        to,
                        msg: Message::Value {
                            round: round + 1,
                            bit: not_s,
                        },
                    });
                }
            }
        }
        out
    }
}

/// Every faulty process claims a decision for `bit` once.
pub struct DecideForger {
    keys: FaultyKeys,
    bit: Bit,
    done: bool,
}

impl DecideForger {
    pub fn new(keys: FaultyKeys, bit: Bit) -> Self {
        DecideForger {
            keys,
            bit,
            done: false,
        }
    }
}

impl Adversary<Message> for DecideForger {
    fn on_step(&mut self, _view: &NetView<'_, Message>) -> Vec<Injection<Message>> {
        if std::mem::replace(&mut self.done, true) {
            return Vec::new();
        }
        self.keys
            .faulty()
            .iter()
            .map(|f| Injection {
                from: f,
                to: Dest::All,
                msg: Message::Decide { bit: self.bit },
            })
            .collect()
    }
}

/// Passes control to `inner` once `gate` is raised.
pub struct Gated<M> {
    gate: Rc<Cell<bool>>,
    inner: Box<dyn Adversary<M>>,
}

impl<M> Gated<M> {
    pub fn new(gate: Rc<Cell<bool>>, inner: Box<dyn Adversary<M>>) -> Self {
        Gated { gate, inner }
    }
}

impl<M> Adversary<M> for Gated<M> {
    fn on_step(&mut self, view: &NetView<'_, M>) -> Vec<Injection<M>> {
        if self.gate.get() {
            self.inner.on_step(view)
        } else {
            Vec::new()
        }
    }
}
