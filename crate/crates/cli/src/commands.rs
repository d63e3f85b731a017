use std::io::Write;
use std::ops::Range;
use std::path::Path;

use anyhow::{Context, Result};
use asymtrust::consensus::{run_attack, Scenario, Variant, ATTACK_ROUNDS};
use asymtrust::dsl::{format_family, Roster};
use asymtrust::quorums::{
    asym_canonical_quorums, check_b3, classify_with_guild, minimal_kernels,
    verify_asym_quorum_system, AsymQuorumSystem,
};
use asymtrust::Bit;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, SchedulerKind};
use crate::report::{
    names, AnalysisRecord, AttackRecord, ClassificationRecord, ProcessQuorums, RunRecord,
    SummaryRecord, VerificationRecord, ViolationRecord, SCHEMA_VERSION,
};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PARSE: u8 = 2;
pub const EXIT_B3: u8 = 3;
pub const EXIT_VIOLATION: u8 = 4;
pub const EXIT_ATTACK_DECIDED: u8 = 5;

pub const DEFAULT_MAX_ROUNDS: u64 = 50;

/// A failure with its process exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl Failure {
    pub fn new(code: u8, error: anyhow::Error) -> Self {
        Failure { code, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        Failure { code: 1, error }
    }
}

pub type Outcome = std::result::Result<u8, Failure>;

pub fn load(path: &Path) -> std::result::Result<Config, Failure> {
    Config::load(path).map_err(|e| Failure::new(EXIT_PARSE, e))
}

fn emit<W: Write, T: Serialize>(out: &mut W, record: &T) -> Result<()> {
    serde_json::to_writer(&mut *out, record)?;
    out.write_all(b"\n")?;
    Ok(())
}

fn quorums_of(cfg: &Config) -> (Option<AsymQuorumSystem>, &'static str) {
    match &cfg.quorums {
        Some(q) => (Some(q.clone()), "explicit"),
        None => match asym_canonical_quorums(&cfg.failprone) {
            Ok(q) => (Some(q), "canonical"),
            Err(_) => (None, "none"),
        },
    }
}

pub fn analyze<W: Write>(cfg: &Config, require_b3: bool, out: &mut W) -> Outcome {
    let roster = &cfg.roster;
    let b3 = check_b3(&cfg.failprone);
    let (aq, source) = quorums_of(cfg);
    let quorums = match &aq {
        Some(aq) => (0..cfg.n())
            .map(|p| ProcessQuorums {
                process: roster.name(p).to_string(),
                quorums: aq.get(p).iter().map(|q| names(roster, q)).collect(),
                minimal_kernels: minimal_kernels(aq.get(p))
                    .ok()
                    .map(|ks| ks.iter().map(|k| names(roster, k)).collect()),
            })
            .collect(),
        None => Vec::new(),
    };
    let verification = aq.as_ref().map(|aq| {
        let r = verify_asym_quorum_system(&cfg.failprone, aq);
        VerificationRecord {
            consistency_violations: r.consistency.len(),
            availability_violations: r.availability.len(),
        }
    });
    let classification = match (&cfg.scenario, &aq) {
        (Some(sc), Some(aq)) => {
            let c = classify_with_guild(&cfg.failprone, aq, &sc.faulty);
            Some(ClassificationRecord::new(roster, Some(aq), &c))
        }
        _ => None,
    };
    let record = AnalysisRecord {
        schema_version: SCHEMA_VERSION,
        kind: "analysis",
        processes: roster.names().to_vec(),
        b3,
        quorum_source: source,
        quorums,
        verification,
        classification,
    };
    emit(out, &record)?;
    print_analysis(roster, aq.as_ref(), &record);
    if require_b3 && !b3 {
        return Err(Failure::new(
            EXIT_B3,
            anyhow::anyhow!("the fail-prone system violates B3"),
        ));
    }
    Ok(EXIT_OK)
}

fn print_analysis(roster: &Roster, aq: Option<&AsymQuorumSystem>, r: &AnalysisRecord) {
    eprintln!("B3: {}", if r.b3 { "holds" } else { "violated" });
    if let Some(aq) = aq {
        eprintln!("quorums ({}):", r.quorum_source);
        let width = roster.names().iter().map(String::len).max().unwrap_or(0);
        for (p, row) in r.quorums.iter().enumerate() {
            eprintln!(
                "  {:width$}  {}",
                row.process,
                format_family(aq.get(p), roster)
            );
            if let Some(ks) = &row.minimal_kernels {
                let ks: Vec<String> = ks.iter().map(|k| format!("{{{}}}", k.join(","))).collect();
                eprintln!("  {:width$}  kernels {}", "", ks.join(" "));
            }
        }
    }
    if let Some(v) = &r.verification {
        eprintln!(
            "consistency violations: {}, availability violations: {}",
            v.consistency_violations, v.availability_violations
        );
    }
    if let Some(c) = &r.classification {
        eprintln!("faulty {{{}}}", c.faulty.join(","));
        eprintln!("wise   {{{}}}", c.wise.join(","));
        eprintln!("naive  {{{}}}", c.naive.join(","));
        match &c.maximal_guild {
            Some(g) => eprintln!("guild  {{{}}}", g.join(",")),
            None => eprintln!("guild  none"),
        }
        for x in &c.excluded {
            eprintln!(
                "{} is wise but outside the guild: quorum {{{}}} contains {} {}",
                x.process,
                x.quorum.join(","),
                x.member_status,
                x.member
            );
        }
    }
}

/// Inputs derived from the seed when the config gives none.
pub fn mixed_inputs(n: usize, seed: u64) -> Vec<Bit> {
    (0..n)
        .map(|i| {
            Bit::from_bool(
                (seed >> (i % 8)) & 1 == 1
                    || seed
                        .wrapping_mul(7)
                        .wrapping_add(i as u64)
                        .is_multiple_of(3),
            )
        })
        .collect()
}

pub struct RunArgs {
    pub name: String,
    pub seeds: Option<Range<u64>>,
    pub max_rounds: Option<u64>,
    pub variant: Option<Variant>,
}

pub fn run<W: Write>(cfg: &Config, args: &RunArgs, out: &mut W) -> Outcome {
    let Some(spec) = &cfg.scenario else {
        return Err(Failure::new(
            EXIT_PARSE,
            anyhow::anyhow!("`run` needs a [scenario] section"),
        ));
    };
    if !check_b3(&cfg.failprone) {
        return Err(Failure::new(
            EXIT_B3,
            anyhow::anyhow!("the fail-prone system violates B3"),
        ));
    }
    if let Some(aq) = &cfg.quorums {
        let r = verify_asym_quorum_system(&cfg.failprone, aq);
        if !r.is_empty() {
            return Err(Failure::new(
                EXIT_B3,
                anyhow::anyhow!(
                    "explicit quorums are not a quorum system for the fail-prone system ({} consistency, {} availability violations)",
                    r.consistency.len(),
                    r.availability.len()
                ),
            ));
        }
    }
    let variant = args.variant.unwrap_or(spec.variant);
    let max_rounds = args
        .max_rounds
        .or(spec.max_rounds)
        .unwrap_or(DEFAULT_MAX_ROUNDS);
    let seeds = args
        .seeds
        .clone()
        .or_else(|| spec.seeds.clone())
        .unwrap_or(0..1);
    let n = cfg.n();
    let build = |seed: u64| -> Result<Scenario> {
        let inputs = spec.inputs.clone().unwrap_or_else(|| mixed_inputs(n, seed));
        let mut sc = Scenario::new(
            args.name.clone(),
            cfg.failprone.clone(),
            spec.faulty,
            inputs,
            variant,
        )?
        .with_strategy(spec.adversary);
        if let Some(aq) = &cfg.quorums {
            sc = sc.with_quorums(aq.clone());
        }
        sc.max_rounds = max_rounds;
        sc.auth = spec.auth;
        Ok(sc)
    };
    let records: Vec<RunRecord> = seeds
        .into_par_iter()
        .map(|seed| {
            let sc = build(seed)?;
            let report = match spec.scheduler {
                SchedulerKind::RandomFair => sc.run(seed, seed),
            };
            Ok(RunRecord::new(&cfg.roster, variant.name(), &report))
        })
        .collect::<Result<_>>()?;
    for r in &records {
        emit(out, r)?;
    }
    let summary = SummaryRecord::new(&records);
    emit(out, &summary)?;
    out.flush().context("flushing output")?;
    print_summary(&summary, n);
    let violations = records.iter().map(|r| r.violations.len()).sum::<usize>();
    if violations > 0 {
        for r in &records {
            for v in &r.violations {
                eprintln!("seed {}: {} violation: {}", r.seed, v.kind, v.detail);
            }
        }
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}

fn print_summary(s: &SummaryRecord, n: usize) {
    eprintln!(
        "runs {}  decided {} ({:.2}%)  safety violations {}",
        s.runs,
        s.wise_decided_runs,
        100.0 * s.decision_rate,
        s.safety_violations
    );
    eprintln!(
        "max messages per round {} ({:.2} n^2)",
        s.max_messages_per_round,
        s.max_messages_per_round as f64 / (n * n) as f64
    );
    for (round, count) in &s.round_histogram {
        eprintln!("  round {round:>3}: {count}");
    }
}

pub struct AttackArgs {
    pub variant: Variant,
    pub seeds: Range<u64>,
    pub trace: Option<std::path::PathBuf>,
}

pub fn attack<W: Write>(args: &AttackArgs, out: &mut W) -> Outcome {
    let roster = Roster::numbered(4);
    let outcomes: Vec<_> = args
        .seeds
        .clone()
        .into_par_iter()
        .map(|seed| {
            let o = run_attack(args.variant, seed, seed);
            let trace =
                (seed == args.seeds.start && args.trace.is_some()).then(|| o.trace.to_jsonl());
            (seed, o.report, o.abandoned_round, trace)
        })
        .collect();
    let mut decided_podc14 = false;
    let mut violations = false;
    for (seed, report, abandoned, trace) in &outcomes {
        let decided = report.wise_decided;
        let verdict = match report.wise_decision_round() {
            Some(k) if decided => format!("decided in round {k}"),
            _ => format!("no decision after {ATTACK_ROUNDS} rounds"),
        };
        if decided && args.variant == Variant::Podc14 {
            decided_podc14 = true;
        }
        violations |= !report.violations.is_empty();
        let record = AttackRecord {
            schema_version: SCHEMA_VERSION,
            kind: "attack",
            variant: args.variant.name(),
            seed: *seed,
            deal_seed: report.deal_seed,
            decided,
            decision_round: report.wise_decision_round(),
            rounds_reached: report.max_round(),
            round_cap: ATTACK_ROUNDS,
            script_abandoned_round: *abandoned,
            violations: report
                .violations
                .iter()
                .map(|v| ViolationRecord::new(&roster, v))
                .collect(),
            verdict: verdict.clone(),
        };
        emit(out, &record)?;
        eprintln!("{} seed {seed}: {verdict}", args.variant.name());
        if let (Some(path), Some(text)) = (&args.trace, trace) {
            std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        }
    }
    out.flush().context("flushing output")?;
    if decided_podc14 {
        eprintln!("podc14 decided under the attack schedule");
        return Ok(EXIT_ATTACK_DECIDED);
    }
    if violations {
        return Ok(EXIT_VIOLATION);
    }
    Ok(EXIT_OK)
}
