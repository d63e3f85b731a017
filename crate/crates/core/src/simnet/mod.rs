//! Deterministic discrete-event network simulator.
//!
//! Processes are [`NodeMachine`]s connected by reliable, authenticated
//! point-to-point links. A [`Scheduler`] picks which in-flight envelope to
//! deliver next; an [`Adversary`] speaks for the faulty processes. Every run
//! is a pure function of its configuration, machines and seeds.

mod network;
pub mod scheduler;
mod trace;

use std::collections::BTreeSet;
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::bit::Bit;
use crate::process_set::{ProcessId, ProcessSet};

pub use network::{Envelope, EnvelopeId};
pub use scheduler::{Action, Pattern, RandomFair, Scheduler, ScriptEntry, ScriptSource, Scripted};
pub use trace::{audit, Audit, EndReason, Event, RoundCount, Trace};

use network::Network;

pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

/// A protocol message carried by the simulator.
pub trait Payload: Clone + fmt::Debug + Serialize {
    /// Round the message belongs to, if it carries one.
    fn round_tag(&self) -> Option<u64>;

    /// Coin traffic is counted apart from the protocol messages.
    fn is_coin(&self) -> bool {
        false
    }
}

/// Something a machine reports to its environment.
pub trait NodeOutput: Clone + fmt::Debug + Serialize {
    /// The round whose coin this output releases, if any.
    fn coin_released(&self) -> Option<u64> {
        None
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
pub enum Dest {
    All,
    To(ProcessId),
}

/// Sends and outputs produced while handling one event.
#[derive(Debug)]
pub struct Effects<M, O> {
    pub sends: Vec<(Dest, M)>,
    pub outputs: Vec<O>,
}

impl<M, O> Default for Effects<M, O> {
    fn default() -> Self {
        Effects {
            sends: Vec::new(),
            outputs: Vec::new(),
        }
    }
}

impl<M, O> Effects<M, O> {
    pub fn send_all(&mut self, m: M) {
        self.sends.push((Dest::All, m));
    }

    pub fn send_to(&mut self, to: ProcessId, m: M) {
        self.sends.push((Dest::To(to), m));
    }

    pub fn output(&mut self, o: O) {
        self.outputs.push(o);
    }
}

/// A deterministic per-process state machine.
pub trait NodeMachine {
    type Msg: Payload;
    type Output: NodeOutput;

    /// Called once before any delivery.
    fn start(&mut self, fx: &mut Effects<Self::Msg, Self::Output>);

    fn on_message(
        &mut self,
        from: ProcessId,
        msg: Self::Msg,
        fx: &mut Effects<Self::Msg, Self::Output>,
    );

    /// A halted machine receives nothing more.
    fn halted(&self) -> bool {
        false
    }

    /// The run may stop once every watched machine is done.
    fn done(&self) -> bool {
        self.halted()
    }

    fn round(&self) -> u64 {
        0
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub n: usize,
    pub faulty: ProcessSet,
    pub fifo: bool,
    pub max_steps: u64,
    /// Stop once every watched machine reached this round.
    pub max_rounds: Option<u64>,
    /// Processes whose completion ends the run. Defaults to the correct ones.
    pub watch: Option<ProcessSet>,
    /// Pending longer than this many steps forces delivery under random scheduling.
    pub fairness_bound: u64,
    /// Record send, deliver and discard events in the trace.
    pub record_traffic: bool,
}

impl RunConfig {
    pub fn new(n: usize) -> Self {
        RunConfig {
            n,
            faulty: ProcessSet::empty(n),
            fifo: true,
            max_steps: DEFAULT_MAX_STEPS,
            max_rounds: None,
            watch: None,
            fairness_bound: 10 * (n as u64) * (n as u64),
            record_traffic: true,
        }
    }

    pub fn correct(&self) -> ProcessSet {
        self.faulty.complement()
    }

    fn watched(&self) -> ProcessSet {
        self.watch
            .unwrap_or_else(|| self.correct())
            .difference(&self.faulty)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SimError {
    #[error("forged envelope: correct process p{} named as sender", .0 + 1)]
    Forgery(ProcessId),

    #[error("machine vector has {got} entries for n = {n}")]
    MachineCount { n: usize, got: usize },

    #[error("p{} is correct but has no machine", .0 + 1)]
    MissingMachine(ProcessId),

    #[error("scheduler chose unknown envelope {0}")]
    UnknownEnvelope(EnvelopeId),
}

/// A message originated by the adversary on behalf of a faulty process.
#[derive(Clone, Debug)]
pub struct Injection<M> {
    pub from: ProcessId,
    pub to: Dest,
    pub msg: M,
}

/// Controls the faulty processes.
pub trait Adversary<M> {
    fn on_step(&mut self, view: &NetView<'_, M>) -> Vec<Injection<M>>;
}

/// Faulty processes that never send.
#[derive(Clone, Copy, Debug, Default)]
pub struct Silent;

impl<M> Adversary<M> for Silent {
    fn on_step(&mut self, _view: &NetView<'_, M>) -> Vec<Injection<M>> {
        Vec::new()
    }
}

/// What schedulers and adversaries may observe.
pub struct NetView<'a, M> {
    net: &'a Network<M>,
    cfg: &'a RunConfig,
    step: u64,
    rounds: &'a [u64],
    recent: &'a [Envelope<M>],
    released: &'a BTreeSet<u64>,
    coin_oracle: Option<&'a dyn Fn(u64) -> Option<Bit>>,
}

impl<'a, M> NetView<'a, M> {
    pub fn n(&self) -> usize {
        self.cfg.n
    }

    pub fn step(&self) -> u64 {
        self.step
    }

    pub fn faulty(&self) -> ProcessSet {
        self.cfg.faulty
    }

    pub fn fifo(&self) -> bool {
        self.cfg.fifo
    }

    pub fn fairness_bound(&self) -> u64 {
        self.cfg.fairness_bound
    }

    /// Envelopes the scheduler may deliver now.
    pub fn deliverable(&self) -> &[EnvelopeId] {
        self.net.deliverable()
    }

    pub fn envelope(&self, id: EnvelopeId) -> Option<&Envelope<M>> {
        self.net.get(id)
    }

    pub fn pending_len(&self) -> usize {
        self.net.pending_len()
    }

    /// Pending envelopes on one ordered pair, in send order.
    pub fn pending_between(
        &self,
        from: ProcessId,
        to: ProcessId,
    ) -> impl Iterator<Item = &Envelope<M>> + '_ {
        self.net.pair(from, to)
    }

    pub fn head(&self, from: ProcessId, to: ProcessId) -> Option<&Envelope<M>> {
        self.net.pair(from, to).next()
    }

    pub fn oldest_pending(&self) -> Option<&Envelope<M>> {
        self.net.oldest()
    }

    /// Current round of every process; faulty processes report 0.
    pub fn rounds(&self) -> &[u64] {
        self.rounds
    }

    /// Envelopes sent since the previous adversary step, including those to faulty processes.
    pub fn recent(&self) -> &[Envelope<M>] {
        self.recent
    }

    /// The coin of `round`, visible once a correct process released it.
    pub fn coin(&self, round: u64) -> Option<Bit> {
        if self.released.contains(&round) {
            self.coin_oracle.and_then(|f| f(round))
        } else {
            None
        }
    }

    pub fn released_rounds(&self) -> &BTreeSet<u64> {
        self.released
    }
}

/// One simulated execution.
/// Final trace and machines of a run; halted or faulty slots are `None`.
pub type Finished<N> = (
    Trace<<N as NodeMachine>::Msg, <N as NodeMachine>::Output>,
    Vec<Option<N>>,
);

pub struct Sim<N: NodeMachine> {
    cfg: RunConfig,
    machines: Vec<Option<N>>,
    net: Network<N::Msg>,
    trace: Trace<N::Msg, N::Output>,
    released: BTreeSet<u64>,
    recent: Vec<Envelope<N::Msg>>,
    rounds: Vec<u64>,
    coin_oracle: Option<Box<dyn Fn(u64) -> Option<Bit>>>,
    step: u64,
}

impl<N: NodeMachine> Sim<N> {
    /// `machines[i]` must be `Some` exactly for correct `i`; entries for faulty processes are ignored.
    pub fn new(cfg: RunConfig, machines: Vec<Option<N>>) -> Result<Self, SimError> {
        if machines.len() != cfg.n {
            return Err(SimError::MachineCount {
                n: cfg.n,
                got: machines.len(),
            });
        }
        let mut machines = machines;
        for (i, m) in machines.iter_mut().enumerate() {
            if cfg.faulty.contains(i) {
                *m = None;
            } else if m.is_none() {
                return Err(SimError::MissingMachine(i));
            }
        }
        let n = cfg.n;
        Ok(Sim {
            net: Network::new(n, cfg.fifo),
            trace: Trace::new(n),
            machines,
            released: BTreeSet::new(),
            recent: Vec::new(),
            rounds: vec![0; n],
            coin_oracle: None,
            step: 0,
            cfg,
        })
    }

    /// Lets the adversary read coin values after a correct release.
    pub fn with_coin_oracle(mut self, f: Box<dyn Fn(u64) -> Option<Bit>>) -> Self {
        self.coin_oracle = Some(f);
        self
    }

    pub fn machines(&self) -> &[Option<N>] {
        &self.machines
    }

    pub fn machine(&self, p: ProcessId) -> Option<&N> {
        self.machines[p].as_ref()
    }

    pub fn trace(&self) -> &Trace<N::Msg, N::Output> {
        &self.trace
    }

    pub fn into_parts(self) -> Finished<N> {
        (self.trace, self.machines)
    }

    /// Runs to completion and returns the trace.
    pub fn run(
        mut self,
        scheduler: &mut dyn scheduler::Scheduler<N::Msg>,
        adversary: &mut dyn Adversary<N::Msg>,
    ) -> Result<Finished<N>, SimError> {
        self.run_in_place(scheduler, adversary)?;
        Ok(self.into_parts())
    }

    pub fn run_in_place(
        &mut self,
        scheduler: &mut dyn scheduler::Scheduler<N::Msg>,
        adversary: &mut dyn Adversary<N::Msg>,
    ) -> Result<(), SimError> {
        for i in 0..self.cfg.n {
            if let Some(m) = self.machines[i].as_mut() {
                let mut fx = Effects::default();
                m.start(&mut fx);
                self.apply(i, fx);
            }
        }
        let end = loop {
            if let Some(end) = self.finished() {
                break end;
            }
            if self.step >= self.cfg.max_steps {
                break EndReason::StepCap;
            }
            let injections = {
                let view = self.view();
                adversary.on_step(&view)
            };
            self.recent.clear();
            let injected = !injections.is_empty();
            for inj in injections {
                self.inject(inj)?;
            }
            let action = {
                let view = self.view();
                scheduler.next(&view)
            };
            match action {
                Action::Deliver(id) => self.deliver(id)?,
                Action::Inject { from, to, msg } => self.inject(Injection {
                    from,
                    to: Dest::To(to),
                    msg,
                })?,
                Action::Stall(entry) => {
                    self.trace.stalls += 1;
                    self.trace.events.push(Event::Stall {
                        step: self.step,
                        entry,
                    });
                }
                Action::Idle => {
                    if !injected {
                        break EndReason::Quiescent;
                    }
                }
            }
            self.step += 1;
        };
        self.trace.end = end;
        self.trace.steps = self.step;
        self.trace.final_rounds = self.rounds.clone();
        Ok(())
    }

    fn finished(&self) -> Option<EndReason> {
        let watched = self.cfg.watched();
        let machines = || watched.iter().filter_map(|p| self.machines[p].as_ref());
        if machines().all(|m| m.done()) {
            return Some(EndReason::AllDone);
        }
        if let Some(cap) = self.cfg.max_rounds {
            if machines().all(|m| m.done() || m.round() >= cap) {
                return Some(EndReason::RoundCap);
            }
        }
        None
    }

    fn view(&self) -> NetView<'_, N::Msg> {
        NetView {
            net: &self.net,
            cfg: &self.cfg,
            step: self.step,
            rounds: &self.rounds,
            recent: &self.recent,
            released: &self.released,
            coin_oracle: self.coin_oracle.as_deref(),
        }
    }

    fn targets(&self, to: Dest) -> Vec<ProcessId> {
        match to {
            Dest::All => (0..self.cfg.n).collect(),
            Dest::To(p) => vec![p],
        }
    }

    fn post(&mut self, from: ProcessId, to: ProcessId, msg: N::Msg) {
        let env = self.net.make(from, to, msg, self.step);
        if self.cfg.record_traffic {
            self.trace.events.push(Event::Send {
                step: self.step,
                id: env.id,
                from,
                to,
                seq: env.seq,
                msg: env.payload.clone(),
            });
        }
        self.recent.push(env.clone());
        let receiver_gone = self.machines[to].as_ref().is_none_or(|m| m.halted());
        if self.cfg.faulty.contains(to) {
            // the adversary reads these through `recent`; nobody consumes them
        } else if receiver_gone {
            if self.cfg.record_traffic {
                self.trace.events.push(Event::Discard {
                    step: self.step,
                    id: env.id,
                    to,
                });
            }
        } else {
            self.net.enqueue(env);
        }
    }

    fn inject(&mut self, inj: Injection<N::Msg>) -> Result<(), SimError> {
        if !self.cfg.faulty.contains(inj.from) {
            return Err(SimError::Forgery(inj.from));
        }
        for to in self.targets(inj.to) {
            self.post(inj.from, to, inj.msg.clone());
        }
        Ok(())
    }

    fn apply(&mut self, from: ProcessId, fx: Effects<N::Msg, N::Output>) {
        let sender_round = self.machines[from].as_ref().map_or(0, |m| m.round());
        for (dest, msg) in fx.sends {
            let targets = self.targets(dest);
            let round = msg.round_tag().unwrap_or(sender_round);
            let count = self.trace.round_counts.entry(round).or_default();
            if msg.is_coin() {
                count.coin += targets.len() as u64;
            } else {
                count.protocol += targets.len() as u64;
            }
            for to in targets {
                self.post(from, to, msg.clone());
            }
        }
        for out in fx.outputs {
            if let Some(r) = out.coin_released() {
                self.released.insert(r);
            }
            self.trace.outputs[from].push(out.clone());
            self.trace.events.push(Event::Output {
                step: self.step,
                process: from,
                output: out,
            });
        }
        if let Some(m) = self.machines[from].as_ref() {
            self.rounds[from] = m.round();
            if m.halted() && !self.trace.halted.contains(from) {
                self.trace.halted.insert(from);
                self.trace.events.push(Event::Halt {
                    step: self.step,
                    process: from,
                });
                for id in self.net.drain_to(from) {
                    if self.cfg.record_traffic {
                        self.trace.events.push(Event::Discard {
                            step: self.step,
                            id,
                            to: from,
                        });
                    }
                }
            }
        }
    }

    fn deliver(&mut self, id: EnvelopeId) -> Result<(), SimError> {
        let env = self.net.take(id).ok_or(SimError::UnknownEnvelope(id))?;
        if self.cfg.record_traffic {
            self.trace.events.push(Event::Deliver {
                step: self.step,
                id,
                from: env.from,
                to: env.to,
                seq: env.seq,
            });
        }
        let to = env.to;
        let mut fx = Effects::default();
        match self.machines[to].as_mut() {
            Some(m) if !m.halted() => m.on_message(env.from, env.payload, &mut fx),
            _ => return Ok(()),
        }
        self.apply(to, fx);
        Ok(())
    }
}
