//! Line-delimited output records. Field order is declaration order and is
//! part of the output format.

use std::collections::BTreeMap;

use asymtrust::consensus::{RunReport, Violation};
use asymtrust::dsl::Roster;
use asymtrust::quorums::{guild_exclusion, AsymQuorumSystem, Classification};
use asymtrust::simnet::EndReason;
use asymtrust::ProcessSet;
use serde::Serialize;

pub const SCHEMA_VERSION: u32 = 1;

pub fn names(roster: &Roster, s: &ProcessSet) -> Vec<String> {
    s.iter().map(|p| roster.name(p).to_string()).collect()
}

#[derive(Debug, Serialize)]
pub struct ProcessQuorums {
    pub process: String,
    pub quorums: Vec<Vec<String>>,
    /// Absent when enumeration is out of range for this system.
    pub minimal_kernels: Option<Vec<Vec<String>>>,
}

#[derive(Debug, Serialize)]
pub struct Exclusion {
    pub process: String,
    pub quorum: Vec<String>,
    pub member: String,
    /// `faulty`, `naive` or `wise`.
    pub member_status: &'static str,
}

#[derive(Debug, Serialize)]
pub struct ClassificationRecord {
    pub faulty: Vec<String>,
    pub wise: Vec<String>,
    pub naive: Vec<String>,
    pub maximal_guild: Option<Vec<String>>,
    /// Wise processes outside the maximal guild, with a quorum member that keeps them out.
    pub excluded: Vec<Exclusion>,
}

impl ClassificationRecord {
    pub fn new(roster: &Roster, aq: Option<&AsymQuorumSystem>, c: &Classification) -> Self {
        let guild = c.maximal_guild.unwrap_or(ProcessSet::empty(roster.len()));
        let mut excluded = Vec::new();
        if let Some(aq) = aq {
            for p in c.wise.iter() {
                if let Some((quorum, member)) = guild_exclusion(aq, &guild, p) {
                    let member_status = if c.faulty.contains(member) {
                        "faulty"
                    } else if c.naive.contains(member) {
                        "naive"
                    } else {
                        "wise"
                    };
                    excluded.push(Exclusion {
                        process: roster.name(p).to_string(),
                        quorum: names(roster, &quorum),
                        member: roster.name(member).to_string(),
                        member_status,
                    });
                }
            }
        }
        ClassificationRecord {
            faulty: names(roster, &c.faulty),
            wise: names(roster, &c.wise),
            naive: names(roster, &c.naive),
            maximal_guild: c.maximal_guild.map(|g| names(roster, &g)),
            excluded,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VerificationRecord {
    pub consistency_violations: usize,
    pub availability_violations: usize,
}

#[derive(Debug, Serialize)]
pub struct AnalysisRecord {
    pub schema_version: u32,
    pub kind: &'static str,
    pub processes: Vec<String>,
    pub b3: bool,
    /// `canonical`, `explicit` or `none`.
    pub quorum_source: &'static str,
    pub quorums: Vec<ProcessQuorums>,
    pub verification: Option<VerificationRecord>,
    pub classification: Option<ClassificationRecord>,
}

#[derive(Debug, Serialize)]
pub struct DecisionRecord {
    pub process: String,
    pub bit: Option<u8>,
    pub round: Option<u64>,
}

#[derive(Debug, Serialize)]
pub struct ViolationRecord {
    pub kind: &'static str,
    pub processes: Vec<String>,
    pub detail: String,
}

impl ViolationRecord {
    pub fn new(roster: &Roster, v: &Violation) -> Self {
        let name = |p: usize| roster.name(p).to_string();
        match *v {
            Violation::Agreement { p, p_bit, q, q_bit } => ViolationRecord {
                kind: "agreement",
                processes: vec![name(p), name(q)],
                detail: format!("{} decided {p_bit}, {} decided {q_bit}", name(p), name(q)),
            },
            Violation::Integrity { process, decisions } => ViolationRecord {
                kind: "integrity",
                processes: vec![name(process)],
                detail: format!("{} decided {decisions} times", name(process)),
            },
            Violation::Validity { process, bit } => ViolationRecord {
                kind: "validity",
                processes: vec![name(process)],
                detail: format!(
                    "{} decided {bit}, which no guild member proposed",
                    name(process)
                ),
            },
            Violation::CoinMismatch {
                process,
                round,
                got,
                expected,
            } => ViolationRecord {
                kind: "coin_mismatch",
                processes: vec![name(process)],
                detail: format!(
                    "{} output coin {got} in round {round}, dealt {expected}",
                    name(process)
                ),
            },
            Violation::SendAfterHalt { process } => ViolationRecord {
                kind: "send_after_halt",
                processes: vec![name(process)],
                detail: format!("{} sent after halting", name(process)),
            },
        }
    }

    /// Agreement, integrity and validity.
    pub fn is_safety(&self) -> bool {
        matches!(self.kind, "agreement" | "integrity" | "validity")
    }
}

#[derive(Debug, Serialize)]
pub struct RunRecord {
    pub schema_version: u32,
    pub kind: &'static str,
    pub scenario: String,
    pub variant: &'static str,
    pub adversary: &'static str,
    pub seed: u64,
    pub deal_seed: u64,
    pub decisions: Vec<DecisionRecord>,
    pub wise_decided: bool,
    /// Largest decision round among wise processes when all of them decided.
    pub decision_round: Option<u64>,
    pub end: EndReason,
    pub rounds_reached: u64,
    pub steps: u64,
    /// Protocol messages sent by correct processes, keyed by round.
    pub messages_per_round: BTreeMap<u64, u64>,
    pub max_messages_per_round: u64,
    pub classification: ClassificationRecord,
    pub violations: Vec<ViolationRecord>,
    pub coin_set_mismatches: usize,
}

impl RunRecord {
    pub fn new(roster: &Roster, variant: &'static str, r: &RunReport) -> Self {
        RunRecord {
            schema_version: SCHEMA_VERSION,
            kind: "run",
            scenario: r.scenario.clone(),
            variant,
            adversary: r.strategy.name(),
            seed: r.seed,
            deal_seed: r.deal_seed,
            decisions: r
                .decisions
                .iter()
                .enumerate()
                .map(|(p, d)| DecisionRecord {
                    process: roster.name(p).to_string(),
                    bit: d.map(|d| d.bit.index() as u8),
                    round: d.map(|d| d.round),
                })
                .collect(),
            wise_decided: r.wise_decided,
            decision_round: r.wise_decision_round(),
            end: r.end,
            rounds_reached: r.max_round(),
            steps: r.steps,
            messages_per_round: r.messages_per_round.clone(),
            max_messages_per_round: r.max_messages_per_round(),
            classification: ClassificationRecord::new(roster, None, &r.classification),
            violations: r
                .violations
                .iter()
                .map(|v| ViolationRecord::new(roster, v))
                .collect(),
            coin_set_mismatches: r.set_mismatches.len(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct SummaryRecord {
    pub schema_version: u32,
    pub kind: &'static str,
    pub runs: usize,
    pub wise_decided_runs: usize,
    pub decision_rate: f64,
    /// Runs per decision round; undecided runs are not counted.
    pub round_histogram: BTreeMap<u64, usize>,
    pub max_messages_per_round: u64,
    pub safety_violations: usize,
}

impl SummaryRecord {
    pub fn new(runs: &[RunRecord]) -> Self {
        let mut round_histogram = BTreeMap::new();
        for r in runs {
            if let Some(k) = r.decision_round {
                *round_histogram.entry(k).or_insert(0) += 1;
            }
        }
        let decided = runs.iter().filter(|r| r.wise_decided).count();
        SummaryRecord {
            schema_version: SCHEMA_VERSION,
            kind: "summary",
            runs: runs.len(),
            wise_decided_runs: decided,
            decision_rate: if runs.is_empty() {
                0.0
            } else {
                decided as f64 / runs.len() as f64
            },
            round_histogram,
            max_messages_per_round: runs
                .iter()
                .map(|r| r.max_messages_per_round)
                .max()
                .unwrap_or(0),
            safety_violations: runs
                .iter()
                .flat_map(|r| &r.violations)
                .filter(|v| v.is_safety())
                .count(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct AttackRecord {
    pub schema_version: u32,
    pub kind: &'static str,
    pub variant: &'static str,
    pub seed: u64,
    pub deal_seed: u64,
    pub decided: bool,
    pub decision_round: Option<u64>,
    pub rounds_reached: u64,
    pub round_cap: u64,
    /// Round in which the schedule stopped following the script.
    pub script_abandoned_round: Option<u64>,
    pub violations: Vec<ViolationRecord>,
    pub verdict: String,
}
