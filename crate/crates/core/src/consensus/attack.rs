//! The coin-aware schedule that keeps the original protocol from terminating.
//!
//! Four processes, one faulty (`a`). In every round two correct processes
//! (`x`, `y`) are driven to deliver both bits and release the coin with
//! `B = {0,1}`. The faulty process learns the coin `s` from its own share view
//! once they release, and then steers the third correct process `z` to a
//! singleton `B = {!s}`. The next round starts split again with roles rotated.

use std::cell::Cell;
use std::collections::VecDeque;
use std::rc::Rc;

use crate::bit::Bit;
use crate::coin::FaultyKeys;
use crate::message::{Message, QuorumId};
use crate::process_set::{ProcessId, ProcessSet};
use crate::simnet::{NetView, Pattern, ScriptEntry, ScriptSource};

type Entry = ScriptEntry<Message>;

fn value(round: u64, bit: Bit) -> Pattern<Message> {
    Pattern::new(format!("VALUE({round},{bit})"), move |m: &Message| {
        *m == Message::Value { round, bit }
    })
}

fn aux(round: u64, bit: Bit) -> Pattern<Message> {
    Pattern::new(format!("AUX({round},{bit})"), move |m: &Message| {
        *m == Message::Aux { round, bit }
    })
}

fn coin(round: u64, q: QuorumId) -> Pattern<Message> {
    Pattern::new(
        format!("COIN({round},p{}#{})", q.owner + 1, q.index),
        move |m: &Message| matches!(m, Message::Coin { round: r, quorum, .. } if *r == round && *quorum == q),
    )
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
enum Phase {
    /// Split `x` and `y` onto `B = {0,1}`.
    Split,
    /// Steer `z` once the coin is known.
    Steer,
}

/// A [`ScriptSource`] generating the attack round by round.
///
/// It gives up (returns `None` from then on) the first time an entry finds
/// nothing to deliver or the coin is not yet visible when needed.
pub struct AttackScript {
    keys: FaultyKeys,
    n: usize,
    x: ProcessId,
    y: ProcessId,
    z: ProcessId,
    a: ProcessId,
    /// The majority value of the round.
    m: Bit,
    round: u64,
    phase: Phase,
    queue: VecDeque<Entry>,
    abandoned: Rc<Cell<Option<u64>>>,
}

impl AttackScript {
    /// `x` holds the minority input `!m`; `y` and `z` hold `m`.
    pub fn new(keys: FaultyKeys, x: ProcessId, y: ProcessId, z: ProcessId, m: Bit) -> Self {
        let n = keys.quorums().n();
        let a = keys.faulty().iter().next().expect("one faulty process");
        AttackScript {
            keys,
            n,
            x,
            y,
            z,
            a,
            m,
            round: 0,
            phase: Phase::Split,
            queue: VecDeque::new(),
            abandoned: Rc::default(),
        }
    }

    /// Holds the round in which the script gave up, once it does.
    pub fn abandoned(&self) -> Rc<Cell<Option<u64>>> {
        self.abandoned.clone()
    }

    fn deliver(&mut self, from: ProcessId, to: ProcessId, p: Pattern<Message>) {
        self.queue.push_back(ScriptEntry::deliver(from, to, p));
    }

    /// `a` sends `msg` to `to` and it is delivered at once.
    fn via_a(&mut self, to: ProcessId, msg: Message, p: Pattern<Message>) {
        self.queue.push_back(ScriptEntry::Inject {
            from: self.a,
            to,
            msg,
        });
        self.deliver(self.a, to, p);
    }

    fn quorum_id(&self, owner: ProcessId) -> Option<QuorumId> {
        let q = ProcessSet::from_indices(self.n, [self.x, self.y, self.a]);
        let index = self.keys.quorums().get(owner).position(&q)?;
        Some(QuorumId { owner, index })
    }

    /// COIN for quorum `{x, y, a}` of `owner`, with `a` contributing its true share.
    fn coin_to(&mut self, owner: ProcessId) -> bool {
        let r = self.round;
        let Some(q) = self.quorum_id(owner) else {
            return false;
        };
        let Some(share) = self.keys.share(r, q, self.a) else {
            return false;
        };
        self.deliver(self.x, owner, coin(r, q));
        self.deliver(self.y, owner, coin(r, q));
        self.via_a(
            owner,
            Message::Coin {
                round: r,
                quorum: q,
                share,
            },
            coin(r, q),
        );
        true
    }

    fn split(&mut self) -> bool {
        let (r, m) = (self.round, self.m);
        let (x, y, z) = (self.x, self.y, self.z);
        let nm = !m;
        // x delivers m, then !m
        self.deliver(y, x, value(r, m));
        self.deliver(z, x, value(r, m));
        self.via_a(x, Message::Value { round: r, bit: m }, value(r, m));
        self.via_a(y, Message::Value { round: r, bit: nm }, value(r, nm));
        self.deliver(x, y, value(r, nm));
        self.via_a(x, Message::Value { round: r, bit: nm }, value(r, nm));
        self.deliver(x, x, value(r, nm));
        self.deliver(y, x, value(r, nm));
        // y delivers !m, then m
        self.deliver(y, y, value(r, nm));
        self.deliver(y, y, value(r, m));
        self.deliver(z, y, value(r, m));
        self.via_a(y, Message::Value { round: r, bit: m }, value(r, m));
        // AUX so that x and y both see {0,1} from {x, y, a}
        self.deliver(x, x, aux(r, m));
        self.via_a(x, Message::Aux { round: r, bit: nm }, aux(r, nm));
        self.deliver(x, x, aux(r, nm));
        self.deliver(y, x, aux(r, nm));
        self.deliver(y, x, aux(r, m));
        self.via_a(x, Message::Aux { round: r, bit: m }, aux(r, m));
        self.deliver(y, y, aux(r, nm));
        self.via_a(y, Message::Aux { round: r, bit: m }, aux(r, m));
        self.deliver(y, y, aux(r, m));
        self.deliver(x, y, aux(r, m));
        self.deliver(x, y, aux(r, nm));
        self.via_a(y, Message::Aux { round: r, bit: nm }, aux(r, nm));
        self.coin_to(x) && self.coin_to(y)
    }

    fn steer(&mut self, s: Bit) -> bool {
        let (r, m) = (self.round, self.m);
        let (x, y, z) = (self.x, self.y, self.z);
        let target = !s;
        if target == m {
            self.deliver(y, z, value(r, m));
            self.via_a(z, Message::Value { round: r, bit: m }, value(r, m));
            self.deliver(z, z, value(r, m));
            self.deliver(x, z, aux(r, m));
            self.via_a(z, Message::Aux { round: r, bit: m }, aux(r, m));
            self.deliver(z, z, aux(r, m));
        } else {
            self.via_a(
                z,
                Message::Value {
                    round: r,
                    bit: target,
                },
                value(r, target),
            );
            self.deliver(x, z, value(r, target));
            self.deliver(y, z, value(r, target));
            self.deliver(y, z, aux(r, target));
            self.via_a(
                z,
                Message::Aux {
                    round: r,
                    bit: target,
                },
                aux(r, target),
            );
            self.deliver(z, z, aux(r, target));
        }
        self.coin_to(z)
    }

    fn abandon(&mut self) -> Option<Entry> {
        if self.abandoned.get().is_none() {
            self.abandoned.set(Some(self.round));
        }
        self.queue.clear();
        None
    }
}

impl ScriptSource<Message> for AttackScript {
    fn next_entry(&mut self, view: &NetView<'_, Message>) -> Option<Entry> {
        if self.abandoned.get().is_some() {
            return None;
        }
        if self.queue.is_empty() {
            let ok = match self.phase {
                Phase::Split => {
                    self.phase = Phase::Steer;
                    self.split()
                }
                Phase::Steer => match view.coin(self.round) {
                    Some(s) => {
                        let ok = self.steer(s);
                        // z now proposes !s and becomes the minority
                        (self.x, self.y, self.z) = (self.z, self.x, self.y);
                        self.m = s;
                        self.round += 1;
                        self.phase = Phase::Split;
                        ok
                    }
                    None => false,
                },
            };
            if !ok {
                return self.abandon();
            }
        }
        self.queue.pop_front()
    }

    fn on_stall(&mut self) {
        self.abandon();
    }
}
