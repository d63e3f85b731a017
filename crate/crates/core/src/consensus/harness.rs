//! Builds runs, executes them and checks the consensus properties on the trace.

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet};
use std::rc::Rc;
use std::sync::Arc;

use serde::Serialize;

use super::adversary::{CoinPeeker, Gated, Strategy};
use super::attack::AttackScript;
use super::node::{ConsensusEvent, ConsensusNode, Variant, VariantFlags};
use crate::bit::{Bit, BitSet};
use crate::coin::{CoinDeal, FaultyKeys, ShareAuth};
use crate::error::Result;
use crate::message::Message;
use crate::process_set::{ProcessId, ProcessSet};
use crate::quorums::{
    asym_canonical_quorums, classify_with_guild, threshold_system, AsymFailProneSystem,
    AsymQuorumSystem, Classification,
};
use crate::simnet::{
    Adversary, EndReason, Event, RandomFair, RunConfig, Scheduler, Scripted, Sim, Trace,
};

pub type ConsensusTrace = Trace<Message, ConsensusEvent>;

/// Everything that fixes a family of runs except the seeds.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    pub af: AsymFailProneSystem,
    pub aq: AsymQuorumSystem,
    pub faulty: ProcessSet,
    /// One per process; entries of faulty processes are unused.
    pub inputs: Vec<Bit>,
    pub flags: VariantFlags,
    pub strategy: Strategy,
    pub auth: ShareAuth,
    pub max_rounds: u64,
    pub max_steps: u64,
    pub record_traffic: bool,
}

impl Scenario {
    /// Canonical quorums, silent adversary, dealer-authenticated shares, 50 rounds.
    pub fn new(
        name: impl Into<String>,
        af: AsymFailProneSystem,
        faulty: ProcessSet,
        inputs: Vec<Bit>,
        variant: Variant,
    ) -> Result<Self> {
        let aq = asym_canonical_quorums(&af)?;
        assert_eq!(inputs.len(), af.n(), "one input per process");
        Ok(Scenario {
            name: name.into(),
            af,
            aq,
            faulty,
            inputs,
            flags: variant.flags(),
            strategy: Strategy::Silent,
            auth: ShareAuth::Dealer,
            max_rounds: 50,
            max_steps: crate::simnet::DEFAULT_MAX_STEPS,
            record_traffic: true,
        })
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_quorums(mut self, aq: AsymQuorumSystem) -> Self {
        self.aq = aq;
        self
    }

    pub fn n(&self) -> usize {
        self.af.n()
    }

    pub fn classification(&self) -> Classification {
        classify_with_guild(&self.af, &self.aq, &self.faulty)
    }

    pub fn deal(&self, deal_seed: u64) -> Arc<CoinDeal> {
        Arc::new(CoinDeal::deal(&self.aq, self.max_rounds + 2, deal_seed))
    }

    fn config(&self, class: &Classification) -> RunConfig {
        let mut cfg = RunConfig::new(self.n());
        cfg.faulty = self.faulty;
        cfg.fifo = self.flags.fifo_links;
        cfg.max_rounds = Some(self.max_rounds);
        cfg.max_steps = self.max_steps;
        cfg.record_traffic = self.record_traffic;
        if !class.wise.is_empty() {
            cfg.watch = Some(class.wise);
        }
        cfg
    }

    /// Random fair scheduling against the scenario's strategy.
    pub fn run(&self, seed: u64, deal_seed: u64) -> RunReport {
        self.run_with(seed, deal_seed, |_, keys| {
            (
                Box::new(RandomFair::new(seed)),
                self.strategy.build(keys, seed),
            )
        })
        .0
    }

    /// Runs with a custom scheduler and adversary built from the deal.
    pub fn run_with<F>(&self, seed: u64, deal_seed: u64, make: F) -> (RunReport, ConsensusTrace)
    where
        F: FnOnce(
            &Arc<CoinDeal>,
            FaultyKeys,
        ) -> (Box<dyn Scheduler<Message>>, Box<dyn Adversary<Message>>),
    {
        let class = self.classification();
        let deal = self.deal(deal_seed);
        let aq = Arc::new(self.aq.clone());
        let machines = (0..self.n())
            .map(|p| {
                (!self.faulty.contains(p)).then(|| {
                    ConsensusNode::new(
                        p,
                        self.inputs[p],
                        aq.clone(),
                        deal.clone(),
                        self.flags,
                        self.auth,
                    )
                })
            })
            .collect();
        let keys = FaultyKeys::new(deal.clone(), self.faulty);
        let (mut scheduler, mut adversary) = make(&deal, keys);
        let oracle = deal.clone();
        let sim = Sim::new(self.config(&class), machines)
            .expect("one machine per correct process")
            .with_coin_oracle(Box::new(move |r| oracle.coin(r)));
        let (trace, _) = sim
            .run(scheduler.as_mut(), adversary.as_mut())
            .expect("adversary speaks only for faulty processes");
        let report = check(self, &class, &deal, &trace, seed, deal_seed);
        (report, trace)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Decision {
    pub round: u64,
    pub bit: Bit,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Agreement {
        p: ProcessId,
        p_bit: Bit,
        q: ProcessId,
        q_bit: Bit,
    },
    Integrity {
        process: ProcessId,
        decisions: usize,
    },
    Validity {
        process: ProcessId,
        bit: Bit,
    },
    CoinMismatch {
        process: ProcessId,
        round: u64,
        got: Bit,
        expected: Bit,
    },
    SendAfterHalt {
        process: ProcessId,
    },
}

/// Two wise processes passed the coin guard of one round with different `B`,
/// at least one of them `{0,1}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SetMismatch {
    pub round: u64,
    pub p: ProcessId,
    pub p_set: BitSet,
    pub q: ProcessId,
    pub q_set: BitSet,
}

/// The checked outcome of one run.
#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub variant: VariantFlags,
    pub strategy: Strategy,
    pub seed: u64,
    pub deal_seed: u64,
    pub decisions: Vec<Option<Decision>>,
    /// Every wise process decided.
    pub wise_decided: bool,
    pub end: EndReason,
    pub steps: u64,
    pub stalls: usize,
    pub final_rounds: Vec<u64>,
    /// Protocol messages (VALUE, AUX, DECIDE) sent by correct processes per round.
    pub messages_per_round: BTreeMap<u64, u64>,
    pub coin_messages_per_round: BTreeMap<u64, u64>,
    pub classification: Classification,
    pub violations: Vec<Violation>,
    pub set_mismatches: Vec<SetMismatch>,
    /// Coin outputs checked against the dealt value.
    pub coin_outputs: usize,
}

impl RunReport {
    pub fn max_messages_per_round(&self) -> u64 {
        self.messages_per_round.values().copied().max().unwrap_or(0)
    }

    /// Largest decision round among wise processes, if all decided.
    pub fn wise_decision_round(&self) -> Option<u64> {
        if !self.wise_decided {
            return None;
        }
        self.classification
            .wise
            .iter()
            .filter_map(|p| self.decisions[p])
            .map(|d| d.round)
            .max()
    }

    pub fn any_decision(&self) -> bool {
        self.decisions.iter().any(Option::is_some)
    }

    pub fn max_round(&self) -> u64 {
        self.final_rounds.iter().copied().max().unwrap_or(0)
    }
}

fn check(
    sc: &Scenario,
    class: &Classification,
    deal: &CoinDeal,
    trace: &ConsensusTrace,
    seed: u64,
    deal_seed: u64,
) -> RunReport {
    let n = sc.n();
    let mut violations = Vec::new();
    let mut decisions = vec![None; n];
    let mut coin_outputs = 0;
    let mut guards: BTreeMap<u64, Vec<(ProcessId, BitSet)>> = BTreeMap::new();
    for (p, outs) in trace.outputs.iter().enumerate() {
        let mut count = 0;
        for o in outs {
            match *o {
                ConsensusEvent::Decided { round, bit } => {
                    count += 1;
                    decisions[p].get_or_insert(Decision { round, bit });
                }
                ConsensusEvent::CoinOutput { round, value } => {
                    coin_outputs += 1;
                    let expected = deal.coin_value(round);
                    let in_guild = class.maximal_guild.is_some_and(|g| g.contains(p));
                    if value != expected && (in_guild || sc.auth == ShareAuth::Dealer) {
                        violations.push(Violation::CoinMismatch {
                            process: p,
                            round,
                            got: value,
                            expected,
                        });
                    }
                }
                ConsensusEvent::CoinGuard { round, b, .. } if class.wise.contains(p) => {
                    guards.entry(round).or_default().push((p, b));
                }
                _ => {}
            }
        }
        if count > 1 {
            violations.push(Violation::Integrity {
                process: p,
                decisions: count,
            });
        }
    }

    let wise: Vec<ProcessId> = class.wise.iter().collect();
    let first = wise
        .iter()
        .find_map(|&p| decisions[p].map(|d: Decision| (p, d.bit)));
    if let Some((p, p_bit)) = first {
        for &q in &wise {
            if let Some(d) = decisions[q] {
                if d.bit != p_bit {
                    violations.push(Violation::Agreement {
                        p,
                        p_bit,
                        q,
                        q_bit: d.bit,
                    });
                }
            }
        }
    }
    if let Some(guild) = class.maximal_guild {
        let proposed: BTreeSet<Bit> = guild.iter().map(|p| sc.inputs[p]).collect();
        for &p in &wise {
            if let Some(d) = decisions[p] {
                if !proposed.contains(&d.bit) {
                    violations.push(Violation::Validity {
                        process: p,
                        bit: d.bit,
                    });
                }
            }
        }
    }
    if sc.record_traffic {
        let mut halted = ProcessSet::empty(n);
        let mut flagged = ProcessSet::empty(n);
        for e in &trace.events {
            match *e {
                Event::Halt { process, .. } => halted.insert(process),
                Event::Send { from, .. } if halted.contains(from) && !flagged.contains(from) => {
                    flagged.insert(from);
                    violations.push(Violation::SendAfterHalt { process: from });
                }
                _ => {}
            }
        }
    }

    let mut set_mismatches = Vec::new();
    for (&round, fired) in &guards {
        if !fired.iter().any(|(_, b)| *b == BitSet::BOTH) {
            continue;
        }
        for (i, &(p, p_set)) in fired.iter().enumerate() {
            for &(q, q_set) in &fired[i + 1..] {
                if p_set != q_set {
                    set_mismatches.push(SetMismatch {
                        round,
                        p,
                        p_set,
                        q,
                        q_set,
                    });
                }
            }
        }
    }

    RunReport {
        scenario: sc.name.clone(),
        variant: sc.flags,
        strategy: sc.strategy,
        seed,
        deal_seed,
        wise_decided: wise.iter().all(|&p| decisions[p].is_some()),
        decisions,
        end: trace.end,
        steps: trace.steps,
        stalls: trace.stalls,
        final_rounds: trace.final_rounds.clone(),
        messages_per_round: trace
            .round_counts
            .iter()
            .map(|(r, c)| (*r, c.protocol))
            .collect(),
        coin_messages_per_round: trace
            .round_counts
            .iter()
            .map(|(r, c)| (*r, c.coin))
            .collect(),
        classification: class.clone(),
        violations,
        set_mismatches,
        coin_outputs,
    }
}

/// Round cap of the attack demonstration.
pub const ATTACK_ROUNDS: u64 = 100;

/// Four processes, one faulty (`p4`), inputs `0, 1, 1`, coin-peeking adversary.
pub fn build_attack_scenario(variant: Variant) -> Scenario {
    let af = threshold_system(4, 1).expect("4 > 3");
    let faulty = ProcessSet::singleton(4, 3);
    let inputs = vec![Bit::Zero, Bit::One, Bit::One, Bit::Zero];
    let mut sc = Scenario::new(
        format!("attack-{}", variant.name()),
        af,
        faulty,
        inputs,
        variant,
    )
    .expect("threshold 4/1 satisfies B3")
    .with_strategy(Strategy::CoinPeek);
    sc.max_rounds = ATTACK_ROUNDS;
    sc
}

/// The attack run: the script drives the schedule while it applies; after it
/// gives up, scheduling is random fair and the coin peeker takes over.
pub fn run_attack(variant: Variant, seed: u64, deal_seed: u64) -> AttackOutcome {
    let sc = build_attack_scenario(variant);
    let abandoned = Rc::new(Cell::new(None));
    let handle = abandoned.clone();
    let (report, trace) = sc.run_with(seed, deal_seed, move |_, keys| {
        let script = AttackScript::new(keys.clone(), 0, 2, 1, Bit::One);
        let status = script.abandoned();
        handle.set(Some(status));
        let gate = Rc::new(Cell::new(false));
        let sched = Scripted::new(Box::new(script), seed).signal_fallback(gate.clone());
        let adv = Gated::new(gate, Box::new(CoinPeeker::new(keys)));
        (
            Box::new(sched) as Box<dyn Scheduler<Message>>,
            Box::new(adv) as Box<dyn Adversary<Message>>,
        )
    });
    let abandoned_round = abandoned.take().and_then(|s| s.get());
    AttackOutcome {
        report,
        abandoned_round,
        trace,
    }
}

pub struct AttackOutcome {
    pub report: RunReport,
    /// Round in which the script stopped applying, if it did.
    pub abandoned_round: Option<u64>,
    pub trace: ConsensusTrace,
}
