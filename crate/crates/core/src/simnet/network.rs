use std::collections::{BTreeMap, HashMap, VecDeque};

use serde::Serialize;

use crate::process_set::ProcessId;

pub type EnvelopeId = u64;

/// An authenticated point-to-point message in flight.
#[derive(Clone, Debug, Serialize)]
pub struct Envelope<M> {
    pub id: EnvelopeId,
    pub from: ProcessId,
    pub to: ProcessId,
    /// Position on the `(from, to)` link, from 0.
    pub seq: u64,
    pub payload: M,
    pub send_step: u64,
}

/// Vec-backed set with O(1) insert, remove and indexed access.
#[derive(Default)]
struct IndexedSet {
    items: Vec<EnvelopeId>,
    pos: HashMap<EnvelopeId, usize>,
}

impl IndexedSet {
    fn insert(&mut self, id: EnvelopeId) {
        if !self.pos.contains_key(&id) {
            self.pos.insert(id, self.items.len());
            self.items.push(id);
        }
    }

    fn remove(&mut self, id: EnvelopeId) {
        if let Some(i) = self.pos.remove(&id) {
            self.items.swap_remove(i);
            if i < self.items.len() {
                self.pos.insert(self.items[i], i);
            }
        }
    }
}

pub(crate) struct Network<M> {
    n: usize,
    fifo: bool,
    next_id: EnvelopeId,
    next_seq: Vec<u64>,
    pending: BTreeMap<EnvelopeId, Envelope<M>>,
    queues: Vec<VecDeque<EnvelopeId>>,
    deliverable: IndexedSet,
}

impl<M> Network<M> {
    pub fn new(n: usize, fifo: bool) -> Self {
        Network {
            n,
            fifo,
            next_id: 0,
            next_seq: vec![0; n * n],
            pending: BTreeMap::new(),
            queues: vec![VecDeque::new(); n * n],
            deliverable: IndexedSet::default(),
        }
    }

    fn link(&self, from: ProcessId, to: ProcessId) -> usize {
        from * self.n + to
    }

    /// Stamps id and sequence number. The envelope is not yet in flight.
    pub fn make(&mut self, from: ProcessId, to: ProcessId, payload: M, step: u64) -> Envelope<M> {
        let link = self.link(from, to);
        let env = Envelope {
            id: self.next_id,
            from,
            to,
            seq: self.next_seq[link],
            payload,
            send_step: step,
        };
        self.next_id += 1;
        self.next_seq[link] += 1;
        env
    }

    pub fn enqueue(&mut self, env: Envelope<M>) {
        let link = self.link(env.from, env.to);
        let q = &mut self.queues[link];
        q.push_back(env.id);
        if !self.fifo || q.len() == 1 {
            self.deliverable.insert(env.id);
        }
        self.pending.insert(env.id, env);
    }

    pub fn take(&mut self, id: EnvelopeId) -> Option<Envelope<M>> {
        if !self.deliverable.pos.contains_key(&id) {
            return None;
        }
        let env = self.pending.remove(&id)?;
        self.deliverable.remove(id);
        let link = self.link(env.from, env.to);
        let q = &mut self.queues[link];
        if q.front() == Some(&id) {
            q.pop_front();
            if self.fifo {
                if let Some(&next) = q.front() {
                    self.deliverable.insert(next);
                }
            }
        } else if let Some(i) = q.iter().position(|x| *x == id) {
            q.remove(i);
        }
        Some(env)
    }

    /// Removes everything addressed to `to`, returning the ids.
    pub fn drain_to(&mut self, to: ProcessId) -> Vec<EnvelopeId> {
        let mut gone = Vec::new();
        for from in 0..self.n {
            let link = self.link(from, to);
            for id in std::mem::take(&mut self.queues[link]) {
                self.pending.remove(&id);
                self.deliverable.remove(id);
                gone.push(id);
            }
        }
        gone.sort_unstable();
        gone
    }

    pub fn deliverable(&self) -> &[EnvelopeId] {
        &self.deliverable.items
    }

    pub fn get(&self, id: EnvelopeId) -> Option<&Envelope<M>> {
        self.pending.get(&id)
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    pub fn pair(&self, from: ProcessId, to: ProcessId) -> impl Iterator<Item = &Envelope<M>> + '_ {
        self.queues[self.link(from, to)]
            .iter()
            .map(move |id| &self.pending[id])
    }

    pub fn oldest(&self) -> Option<&Envelope<M>> {
        self.pending.values().next()
    }
}
