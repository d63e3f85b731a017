//! Delivery strategies.

use std::cell::Cell;
use std::collections::VecDeque;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::network::EnvelopeId;
use super::NetView;
use crate::process_set::ProcessId;

/// One scheduling decision.
#[derive(Clone, Debug)]
pub enum Action<M> {
    Deliver(EnvelopeId),
    /// Originate a message from a faulty process.
    Inject {
        from: ProcessId,
        to: ProcessId,
        msg: M,
    },
    /// A scripted entry found nothing to deliver.
    Stall(String),
    /// Nothing to do.
    Idle,
}

pub trait Scheduler<M> {
    fn next(&mut self, view: &NetView<'_, M>) -> Action<M>;
}

/// Uniform choice among deliverable envelopes, with overdue envelopes first.
pub struct RandomFair {
    rng: ChaCha8Rng,
    bound: Option<u64>,
}

impl RandomFair {
    pub fn new(seed: u64) -> Self {
        RandomFair {
            rng: ChaCha8Rng::seed_from_u64(seed),
            bound: None,
        }
    }

    /// Overrides the run's fairness bound.
    pub fn with_bound(seed: u64, bound: u64) -> Self {
        RandomFair {
            rng: ChaCha8Rng::seed_from_u64(seed),
            bound: Some(bound),
        }
    }
}

impl<M> Scheduler<M> for RandomFair {
    fn next(&mut self, view: &NetView<'_, M>) -> Action<M> {
        let bound = self.bound.unwrap_or_else(|| view.fairness_bound());
        if let Some(old) = view.oldest_pending() {
            if view.step().saturating_sub(old.send_step) >= bound {
                return Action::Deliver(old.id);
            }
        }
        let ready = view.deliverable();
        if ready.is_empty() {
            return Action::Idle;
        }
        Action::Deliver(ready[self.rng.gen_range(0..ready.len())])
    }
}

/// A labelled predicate over payloads.
pub struct Pattern<M> {
    pub label: String,
    pred: Box<dyn Fn(&M) -> bool>,
}

impl<M> Pattern<M> {
    pub fn new(label: impl Into<String>, pred: impl Fn(&M) -> bool + 'static) -> Self {
        Pattern {
            label: label.into(),
            pred: Box::new(pred),
        }
    }

    pub fn matches(&self, m: &M) -> bool {
        (self.pred)(m)
    }
}

pub enum ScriptEntry<M> {
    /// Deliver the `occurrence`-th pending envelope on `from -> to` matching `pattern`.
    Deliver {
        from: ProcessId,
        to: ProcessId,
        pattern: Pattern<M>,
        occurrence: usize,
    },
    Inject {
        from: ProcessId,
        to: ProcessId,
        msg: M,
    },
}

impl<M> ScriptEntry<M> {
    pub fn deliver(from: ProcessId, to: ProcessId, pattern: Pattern<M>) -> Self {
        ScriptEntry::Deliver {
            from,
            to,
            pattern,
            occurrence: 0,
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ScriptEntry::Deliver {
                from,
                to,
                pattern,
                occurrence,
            } => {
                format!(
                    "deliver p{}->p{} {} #{}",
                    from + 1,
                    to + 1,
                    pattern.label,
                    occurrence
                )
            }
            ScriptEntry::Inject { from, to, .. } => format!("inject p{}->p{}", from + 1, to + 1),
        }
    }
}

/// Produces script entries, possibly depending on what it observes.
pub trait ScriptSource<M> {
    fn next_entry(&mut self, view: &NetView<'_, M>) -> Option<ScriptEntry<M>>;

    /// Called after the entry last returned matched nothing.
    fn on_stall(&mut self) {}
}

impl<M> ScriptSource<M> for VecDeque<ScriptEntry<M>> {
    fn next_entry(&mut self, _view: &NetView<'_, M>) -> Option<ScriptEntry<M>> {
        self.pop_front()
    }
}

/// Follows a script, then falls back to [`RandomFair`].
///
/// Under FIFO links, an entry whose envelope is not at the head of its link
/// first forces delivery of the envelopes ahead of it.
pub struct Scripted<M> {
    source: Box<dyn ScriptSource<M>>,
    current: Option<ScriptEntry<M>>,
    exhausted: bool,
    fallback: RandomFair,
    on_fallback: Option<Rc<Cell<bool>>>,
    forced: usize,
}

impl<M: 'static> Scripted<M> {
    pub fn new(source: Box<dyn ScriptSource<M>>, fallback_seed: u64) -> Self {
        Scripted {
            source,
            current: None,
            exhausted: false,
            fallback: RandomFair::new(fallback_seed),
            on_fallback: None,
            forced: 0,
        }
    }

    pub fn from_entries(entries: Vec<ScriptEntry<M>>, fallback_seed: u64) -> Self {
        Self::new(
            Box::new(entries.into_iter().collect::<VecDeque<_>>()),
            fallback_seed,
        )
    }

    /// The flag is raised once the script is exhausted.
    pub fn signal_fallback(mut self, flag: Rc<Cell<bool>>) -> Self {
        self.on_fallback = Some(flag);
        self
    }

    pub fn following_script(&self) -> bool {
        !self.exhausted
    }

    /// Deliveries made out of script order to respect FIFO.
    pub fn forced_deliveries(&self) -> usize {
        self.forced
    }
}

impl<M: 'static> Scheduler<M> for Scripted<M> {
    fn next(&mut self, view: &NetView<'_, M>) -> Action<M> {
        if self.current.is_none() && !self.exhausted {
            self.current = self.source.next_entry(view);
            if self.current.is_none() {
                self.exhausted = true;
                if let Some(flag) = &self.on_fallback {
                    flag.set(true);
                }
            }
        }
        let Some(entry) = self.current.take() else {
            return self.fallback.next(view);
        };
        match entry {
            ScriptEntry::Inject { from, to, msg } => Action::Inject { from, to, msg },
            ScriptEntry::Deliver {
                from,
                to,
                ref pattern,
                occurrence,
            } => {
                let found = view
                    .pending_between(from, to)
                    .filter(|e| pattern.matches(&e.payload))
                    .nth(occurrence)
                    .map(|e| e.id);
                match found {
                    Some(id) => {
                        let head = view.head(from, to).map(|e| e.id);
                        if view.fifo() && head != Some(id) {
                            self.forced += 1;
                            let head = head.expect("link holds the match");
                            self.current = Some(entry);
                            Action::Deliver(head)
                        } else {
                            Action::Deliver(id)
                        }
                    }
                    None => {
                        let what = entry.describe();
                        self.source.on_stall();
                        Action::Stall(what)
                    }
                }
            }
        }
    }
}
