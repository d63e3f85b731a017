use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{self, Write};

use serde::Serialize;

use super::network::EnvelopeId;
use crate::process_set::{ProcessId, ProcessSet};

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Event<M, O> {
    Send {
        step: u64,
        id: EnvelopeId,
        from: ProcessId,
        to: ProcessId,
        seq: u64,
        msg: M,
    },
    Deliver {
        step: u64,
        id: EnvelopeId,
        from: ProcessId,
        to: ProcessId,
        seq: u64,
    },
    Discard {
        step: u64,
        id: EnvelopeId,
        to: ProcessId,
    },
    Output {
        step: u64,
        process: ProcessId,
        output: O,
    },
    Halt {
        step: u64,
        process: ProcessId,
    },
    Stall {
        step: u64,
        entry: String,
    },
}

#[derive(Copy, Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RoundCount {
    pub protocol: u64,
    pub coin: u64,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EndReason {
    /// Every watched process finished.
    AllDone,
    /// Every watched process finished or reached the round cap.
    RoundCap,
    /// Nothing left to deliver and the adversary stayed quiet.
    Quiescent,
    StepCap,
    /// The run has not ended yet.
    Running,
}

/// Ordered record of one execution.
#[derive(Clone, Debug, Serialize)]
pub struct Trace<M, O> {
    pub events: Vec<Event<M, O>>,
    /// Outputs per process, in emission order.
    pub outputs: Vec<Vec<O>>,
    /// Messages sent by correct processes, by round.
    pub round_counts: BTreeMap<u64, RoundCount>,
    pub end: EndReason,
    pub steps: u64,
    pub final_rounds: Vec<u64>,
    pub halted: ProcessSet,
    pub stalls: usize,
}

impl<M: Serialize, O: Serialize> Trace<M, O> {
    pub(crate) fn new(n: usize) -> Self {
        Trace {
            events: Vec::new(),
            outputs: (0..n).map(|_| Vec::new()).collect(),
            round_counts: BTreeMap::new(),
            end: EndReason::Running,
            steps: 0,
            final_rounds: vec![0; n],
            halted: ProcessSet::empty(n),
            stalls: 0,
        }
    }

    /// One JSON object per event.
    pub fn write_jsonl<W: Write>(&self, mut w: W) -> io::Result<()> {
        for e in &self.events {
            serde_json::to_writer(&mut w, e)?;
            w.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("json is utf-8")
    }
}

impl<M, O> Trace<M, O> {
    pub fn max_protocol_per_round(&self) -> u64 {
        self.round_counts
            .values()
            .map(|c| c.protocol)
            .max()
            .unwrap_or(0)
    }
}

/// Link-level checks over a recorded trace.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Audit {
    /// Deliveries with no matching earlier send.
    pub unmatched_deliveries: usize,
    pub duplicate_deliveries: usize,
    /// Sends between correct processes neither delivered nor discarded.
    pub undelivered: usize,
    /// Deliveries on a correct link that went backwards in sequence.
    pub fifo_inversions: usize,
}

/// Checks reliability, authentication and link order among correct processes.
pub fn audit<M, O>(trace: &Trace<M, O>, faulty: &ProcessSet) -> Audit {
    let mut sent: HashMap<EnvelopeId, (ProcessId, ProcessId, u64)> = HashMap::new();
    let mut settled: HashSet<EnvelopeId> = HashSet::new();
    let mut last_seq: HashMap<(ProcessId, ProcessId), u64> = HashMap::new();
    let mut a = Audit::default();
    for e in &trace.events {
        match e {
            Event::Send {
                id, from, to, seq, ..
            } => {
                sent.insert(*id, (*from, *to, *seq));
            }
            Event::Deliver {
                id, from, to, seq, ..
            } => {
                match sent.get(id) {
                    Some(&(f, t, s)) if f == *from && t == *to && s == *seq => {}
                    _ => a.unmatched_deliveries += 1,
                }
                if !settled.insert(*id) {
                    a.duplicate_deliveries += 1;
                }
                if !faulty.contains(*from) && !faulty.contains(*to) {
                    if let Some(prev) = last_seq.insert((*from, *to), *seq) {
                        if *seq < prev {
                            a.fifo_inversions += 1;
                        }
                    }
                }
            }
            Event::Discard { id, .. } => {
                settled.insert(*id);
            }
            _ => {}
        }
    }
    a.undelivered = sent
        .iter()
        .filter(|(id, (f, t, _))| {
            !faulty.contains(*f) && !faulty.contains(*t) && !settled.contains(id)
        })
        .count();
    a
}
