//! Dealer-based common coin.
//!
//! For every round the dealer draws a coin value and, for every quorum of
//! every process, additive XOR shares of it held by the quorum's members.
//! A process that collects all shares of one of its own quorums learns the
//! coin.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bit::Bit;
use crate::message::{Message, QuorumId};
use crate::process_set::{ProcessId, ProcessSet};
use crate::quorums::AsymQuorumSystem;
use crate::simnet::{Effects, NodeMachine, NodeOutput};

/// Pre-dealt coins and shares for rounds `0..rounds`.
#[derive(Clone, Debug)]
pub struct CoinDeal {
    seed: u64,
    aq: AsymQuorumSystem,
    coins: Vec<Bit>,
    /// `offsets[i]` is where the quorums of process `i` start in a round's share vector.
    offsets: Vec<usize>,
    /// Per round, one mask per quorum; bit `r` is the share of the member of rank `r`.
    shares: Vec<Vec<u64>>,
}

impl CoinDeal {
    pub fn deal(aq: &AsymQuorumSystem, rounds: u64, seed: u64) -> Self {
        assert!(rounds >= 1, "deal at least one round");
        let mut offsets = Vec::with_capacity(aq.n());
        let mut total = 0;
        for row in aq.systems() {
            offsets.push(total);
            total += row.len();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut coins = Vec::with_capacity(rounds as usize);
        let mut shares = Vec::with_capacity(rounds as usize);
        for _ in 0..rounds {
            let coin = Bit::from_bool(rng.gen());
            let mut masks = Vec::with_capacity(total);
            for row in aq.systems() {
                for q in row {
                    masks.push(split(&mut rng, q.len(), coin));
                }
            }
            coins.push(coin);
            shares.push(masks);
        }
        CoinDeal {
            seed,
            aq: aq.clone(),
            coins,
            offsets,
            shares,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn rounds(&self) -> u64 {
        self.coins.len() as u64
    }

    pub fn quorums(&self) -> &AsymQuorumSystem {
        &self.aq
    }

    pub fn coin(&self, round: u64) -> Option<Bit> {
        self.coins.get(usize::try_from(round).ok()?).copied()
    }

    /// Panics past the dealt rounds.
    pub fn coin_value(&self, round: u64) -> Bit {
        assert!(
            round < self.rounds(),
            "round {round} beyond the {} dealt",
            self.rounds()
        );
        self.coins[round as usize]
    }

    pub fn quorum(&self, q: QuorumId) -> Option<&ProcessSet> {
        self.aq.systems().get(q.owner)?.get(q.index)
    }

    /// Share of `holder` for quorum `q`, if `holder` is a member and the round was dealt.
    pub fn share(&self, round: u64, q: QuorumId, holder: ProcessId) -> Option<Bit> {
        let rank = self.quorum(q)?.rank(holder)?;
        let mask = self.shares.get(usize::try_from(round).ok()?)?[self.offsets[q.owner] + q.index];
        Some(Bit::from_bool((mask >> rank) & 1 == 1))
    }

    /// Dealer authentication: `claimed` is the share the dealer gave `holder`.
    pub fn authenticate(&self, round: u64, q: QuorumId, holder: ProcessId, claimed: Bit) -> bool {
        self.share(round, q, holder) == Some(claimed)
    }

    /// Every COIN message `me` sends when releasing `round`; none past the dealt rounds.
    pub fn release_messages(&self, round: u64, me: ProcessId) -> Vec<(ProcessId, Message)> {
        let mut out = Vec::new();
        if round >= self.rounds() {
            return out;
        }
        for (owner, row) in self.aq.systems().iter().enumerate() {
            for (index, q) in row.iter().enumerate() {
                if q.contains(me) {
                    let quorum = QuorumId { owner, index };
                    let share = self.share(round, quorum, me).expect("member holds a share");
                    out.push((
                        owner,
                        Message::Coin {
                            round,
                            quorum,
                            share,
                        },
                    ));
                }
            }
        }
        out
    }
}

fn split(rng: &mut ChaCha8Rng, m: usize, coin: Bit) -> u64 {
    let mut mask = 0u64;
    let mut parity = 0u64;
    for r in 0..m.saturating_sub(1) {
        let b: u64 = rng.gen_range(0..2);
        mask |= b << r;
        parity ^= b;
    }
    if m > 0 {
        mask |= (parity ^ coin.index() as u64) << (m - 1);
    }
    mask
}

/// How a receiver vets an incoming share.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareAuth {
    /// Shares carry the dealer's authentication; a wrong value is dropped.
    Dealer,
    /// Only the sender identity is authenticated; a faulty member may lie about its share.
    SenderOnly,
}

/// Reconstruction state of one process for one round.
#[derive(Clone, Debug)]
pub struct CoinState {
    me: ProcessId,
    round: u64,
    have: Vec<u64>,
    value: Vec<u64>,
    released: bool,
    output: Option<Bit>,
}

impl CoinState {
    pub fn new(me: ProcessId, round: u64, deal: &CoinDeal) -> Self {
        let k = deal.quorums().get(me).len();
        CoinState {
            me,
            round,
            have: vec![0; k],
            value: vec![0; k],
            released: false,
            output: None,
        }
    }

    pub fn released(&self) -> bool {
        self.released
    }

    pub fn output(&self) -> Option<Bit> {
        self.output
    }

    /// COIN messages to send, once.
    pub fn release(&mut self, deal: &CoinDeal) -> Vec<(ProcessId, Message)> {
        if std::mem::replace(&mut self.released, true) {
            return Vec::new();
        }
        deal.release_messages(self.round, self.me)
    }

    /// Records a share; returns the coin the first time a quorum is complete.
    pub fn on_coin(
        &mut self,
        from: ProcessId,
        quorum: QuorumId,
        share: Bit,
        deal: &CoinDeal,
        auth: ShareAuth,
    ) -> Option<Bit> {
        if quorum.owner != self.me || self.output.is_some() {
            return None;
        }
        let q = *deal.quorum(quorum)?;
        if !q.contains(from) {
            return None;
        }
        if auth == ShareAuth::Dealer && !deal.authenticate(self.round, quorum, from, share) {
            return None;
        }
        let k = quorum.index;
        let bit = 1u64 << from;
        if self.have[k] & bit != 0 {
            return None;
        }
        self.have[k] |= bit;
        if share == Bit::One {
            self.value[k] |= bit;
        }
        if self.have[k] == q.bits() {
            let s = Bit::from_bool(self.value[k].count_ones() % 2 == 1);
            self.output = Some(s);
            return Some(s);
        }
        None
    }
}

/// Share knowledge of the faulty processes only.
#[derive(Clone, Debug)]
pub struct FaultyKeys {
    deal: Arc<CoinDeal>,
    faulty: ProcessSet,
}

impl FaultyKeys {
    pub fn new(deal: Arc<CoinDeal>, faulty: ProcessSet) -> Self {
        FaultyKeys { deal, faulty }
    }

    pub fn faulty(&self) -> ProcessSet {
        self.faulty
    }

    pub fn quorums(&self) -> &AsymQuorumSystem {
        self.deal.quorums()
    }

    pub fn share(&self, round: u64, q: QuorumId, holder: ProcessId) -> Option<Bit> {
        if !self.faulty.contains(holder) {
            return None;
        }
        self.deal.share(round, q, holder)
    }

    /// The COIN messages faulty `holder` would send on an honest release.
    pub fn release_messages(&self, round: u64, holder: ProcessId) -> Vec<(ProcessId, Message)> {
        if !self.faulty.contains(holder) {
            return Vec::new();
        }
        self.deal.release_messages(round, holder)
    }

    /// Can the faulty processes alone rebuild the coin of some quorum of `owner`?
    pub fn can_reconstruct(&self, owner: ProcessId) -> bool {
        self.deal
            .quorums()
            .get(owner)
            .iter()
            .any(|q| q.is_subset(&self.faulty))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum CoinEvent {
    Released { round: u64 },
    Output { round: u64, value: Bit },
}

impl NodeOutput for CoinEvent {
    fn coin_released(&self) -> Option<u64> {
        match self {
            CoinEvent::Released { round } => Some(*round),
            _ => None,
        }
    }
}

/// Runs the coin alone for one round: release on start, output on reconstruction.
pub struct CoinNode {
    deal: Arc<CoinDeal>,
    state: CoinState,
    auth: ShareAuth,
    release_at_start: bool,
}

impl CoinNode {
    pub fn new(me: ProcessId, round: u64, deal: Arc<CoinDeal>, auth: ShareAuth) -> Self {
        let state = CoinState::new(me, round, &deal);
        CoinNode {
            deal,
            state,
            auth,
            release_at_start: true,
        }
    }

    /// A node that never releases.
    pub fn withholding(mut self) -> Self {
        self.release_at_start = false;
        self
    }

    pub fn output(&self) -> Option<Bit> {
        self.state.output()
    }
}

impl NodeMachine for CoinNode {
    type Msg = Message;
    type Output = CoinEvent;

    fn start(&mut self, fx: &mut Effects<Message, CoinEvent>) {
        if !self.release_at_start {
            return;
        }
        let round = self.state.round;
        for (to, m) in self.state.release(&self.deal) {
            fx.send_to(to, m);
        }
        fx.output(CoinEvent::Released { round });
    }

    fn on_message(&mut self, from: ProcessId, msg: Message, fx: &mut Effects<Message, CoinEvent>) {
        if let Message::Coin {
            round,
            quorum,
            share,
        } = msg
        {
            if round == self.state.round {
                if let Some(value) = self
                    .state
                    .on_coin(from, quorum, share, &self.deal, self.auth)
                {
                    fx.output(CoinEvent::Output { round, value });
                }
            }
        }
    }

    fn done(&self) -> bool {
        self.state.output().is_some()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::process_set::SetFamily;
    use crate::quorums::{asym_canonical_quorums, threshold_system};

    fn t41() -> AsymQuorumSystem {
        asym_canonical_quorums(&threshold_system(4, 1).unwrap()).unwrap()
    }

    #[test]
    fn shares_xor_to_coin() {
        let aq = t41();
        let deal = CoinDeal::deal(&aq, 50, 3);
        for r in 0..50 {
            for i in 0..4 {
                for (k, q) in aq.get(i).iter().enumerate() {
                    let qid = QuorumId { owner: i, index: k };
                    let x = q
                        .iter()
                        .fold(Bit::Zero, |acc, j| acc.xor(deal.share(r, qid, j).unwrap()));
                    assert_eq!(x, deal.coin_value(r));
                    assert_eq!(
                        deal.share(r, qid, q.complement().iter().next().unwrap()),
                        None
                    );
                }
            }
        }
    }

    #[test]
    fn singleton_quorum_share_is_coin() {
        let q = SetFamily::from_lists(1, &[&[0]]);
        let aq = AsymQuorumSystem::new(1, vec![q]).unwrap();
        let deal = CoinDeal::deal(&aq, 20, 9);
        for r in 0..20 {
            assert_eq!(
                deal.share(r, QuorumId { owner: 0, index: 0 }, 0),
                Some(deal.coin_value(r))
            );
        }
    }

    #[test]
    fn reconstruction_first_write_wins() {
        let aq = t41();
        let deal = CoinDeal::deal(&aq, 1, 5);
        let mut st = CoinState::new(0, 0, &deal);
        let qid = QuorumId { owner: 0, index: 0 };
        let q = *deal.quorum(qid).unwrap();
        let members: Vec<_> = q.iter().collect();
        let s0 = deal.share(0, qid, members[0]).unwrap();
        assert_eq!(
            st.on_coin(members[0], qid, s0, &deal, ShareAuth::SenderOnly),
            None
        );
        // a replayed, different bit from the same member is ignored
        assert_eq!(
            st.on_coin(members[0], qid, !s0, &deal, ShareAuth::SenderOnly),
            None
        );
        let s1 = deal.share(0, qid, members[1]).unwrap();
        assert_eq!(
            st.on_coin(members[1], qid, s1, &deal, ShareAuth::SenderOnly),
            None
        );
        let s2 = deal.share(0, qid, members[2]).unwrap();
        assert_eq!(
            st.on_coin(members[2], qid, s2, &deal, ShareAuth::SenderOnly),
            Some(deal.coin_value(0))
        );
        assert_eq!(
            st.on_coin(members[2], qid, s2, &deal, ShareAuth::SenderOnly),
            None
        );
    }

    #[test]
    fn dealer_auth_drops_lies_and_outsiders() {
        let aq = t41();
        let deal = CoinDeal::deal(&aq, 1, 5);
        let mut st = CoinState::new(0, 0, &deal);
        let qid = QuorumId { owner: 0, index: 0 };
        let q = *deal.quorum(qid).unwrap();
        let outsider = q.complement().iter().next().unwrap();
        assert_eq!(
            st.on_coin(outsider, qid, Bit::One, &deal, ShareAuth::Dealer),
            None
        );
        let m = q.iter().next().unwrap();
        let s = deal.share(0, qid, m).unwrap();
        st.on_coin(m, qid, !s, &deal, ShareAuth::Dealer);
        assert_eq!(st.have[0], 0);
        // shares for another process's quorum are ignored
        st.on_coin(
            m,
            QuorumId { owner: 1, index: 0 },
            Bit::One,
            &deal,
            ShareAuth::Dealer,
        );
        assert!(st.have.iter().all(|h| *h == 0));
    }

    #[test]
    fn release_once() {
        let aq = t41();
        let deal = CoinDeal::deal(&aq, 1, 1);
        let mut st = CoinState::new(2, 0, &deal);
        let first = st.release(&deal);
        // p3 sits in three of the four 3-subsets of every process
        assert_eq!(first.len(), 12);
        assert!(st.release(&deal).is_empty());
    }
}
