//! TOML run configuration.
//!
//! ```toml
//! roster = ["p1", "p2", "p3", "p4"]
//!
//! [failprone]
//! p1 = "theta(1,{p2,p3,p4})"
//! # one entry per roster name
//!
//! [quorums]            # optional, replaces the canonical quorums
//! p1 = "[{p1,p2,p3},{p1,p2,p4}]"
//!
//! [scenario]           # optional for `analyze`, required for `run`
//! variant = "fixed"
//! faulty = ["p4"]
//! inputs = [0, 1, 1, 0]
//! seeds = "0..100"
//! max_rounds = 50
//! scheduler = "random_fair"
//! adversary = "silent"
//! auth = "dealer"
//! ```

use std::collections::BTreeMap;
use std::ops::Range;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use asymtrust::coin::ShareAuth;
use asymtrust::consensus::{Strategy, Variant};
use asymtrust::dsl::{expand, parse, parse_system, Roster};
use asymtrust::quorums::{AsymFailProneSystem, AsymQuorumSystem};
use asymtrust::{Bit, ProcessSet, SetFamily};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    roster: Vec<String>,
    failprone: BTreeMap<String, String>,
    quorums: Option<BTreeMap<String, String>>,
    scenario: Option<ScenarioSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioSection {
    variant: Option<Variant>,
    #[serde(default)]
    faulty: Vec<String>,
    inputs: Option<Vec<u8>>,
    seeds: Option<String>,
    max_rounds: Option<u64>,
    scheduler: Option<SchedulerKind>,
    adversary: Option<Strategy>,
    auth: Option<ShareAuth>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    RandomFair,
}

#[derive(Debug, Clone)]
pub struct ScenarioSpec {
    pub variant: Variant,
    pub faulty: ProcessSet,
    pub inputs: Option<Vec<Bit>>,
    pub seeds: Option<Range<u64>>,
    pub max_rounds: Option<u64>,
    pub scheduler: SchedulerKind,
    pub adversary: Strategy,
    pub auth: ShareAuth,
}

/// A validated configuration.
#[derive(Debug, Clone)]
pub struct Config {
    pub roster: Roster,
    pub failprone: AsymFailProneSystem,
    pub quorums: Option<AsymQuorumSystem>,
    pub scenario: Option<ScenarioSpec>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: ConfigFile = toml::from_str(text)?;
        let roster = Roster::new(file.roster.iter().cloned())?;
        let rows = per_process(&roster, &file.failprone, "failprone")?;
        let failprone = parse_system(&rows, &roster)?;
        let quorums = file
            .quorums
            .as_ref()
            .map(|q| explicit_quorums(&roster, q))
            .transpose()?;
        let scenario = file.scenario.map(|s| scenario(&roster, s)).transpose()?;
        Ok(Config {
            roster,
            failprone,
            quorums,
            scenario,
        })
    }

    pub fn n(&self) -> usize {
        self.roster.len()
    }
}

/// One entry per roster name, in roster order.
fn per_process(
    roster: &Roster,
    table: &BTreeMap<String, String>,
    section: &str,
) -> Result<Vec<String>> {
    if let Some(stray) = table.keys().find(|k| roster.lookup(k).is_none()) {
        bail!("[{section}] names `{stray}`, which is not in the roster");
    }
    roster
        .names()
        .iter()
        .map(|name| {
            table
                .get(name)
                .cloned()
                .ok_or_else(|| anyhow!("[{section}] has no entry for `{name}`"))
        })
        .collect()
}

fn explicit_quorums(roster: &Roster, table: &BTreeMap<String, String>) -> Result<AsymQuorumSystem> {
    let n = roster.len();
    let rows = per_process(roster, table, "quorums")?;
    let mut systems = Vec::with_capacity(n);
    for (name, text) in roster.names().iter().zip(&rows) {
        let expr = parse(text, roster).with_context(|| format!("quorums of {name}"))?;
        let mut fam = SetFamily::empty(n);
        for s in expand(&expr, n) {
            fam.push(s);
        }
        if fam.is_empty() {
            bail!("quorums of {name}: empty quorum list");
        }
        systems.push(fam);
    }
    Ok(AsymQuorumSystem::new(n, systems)?)
}

fn scenario(roster: &Roster, s: ScenarioSection) -> Result<ScenarioSpec> {
    let n = roster.len();
    let mut faulty = ProcessSet::empty(n);
    for name in &s.faulty {
        let p = roster
            .lookup(name)
            .ok_or_else(|| anyhow!("[scenario] faulty names unknown process `{name}`"))?;
        faulty.insert(p);
    }
    let inputs = s
        .inputs
        .map(|raw| {
            if raw.len() != n {
                bail!("[scenario] has {} inputs for {n} processes", raw.len());
            }
            raw.iter()
                .map(|&v| {
                    Bit::from_u8(v).ok_or_else(|| anyhow!("[scenario] input {v} is not a bit"))
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let seeds = s.seeds.as_deref().map(parse_seeds).transpose()?;
    Ok(ScenarioSpec {
        variant: s.variant.unwrap_or(Variant::Fixed),
        faulty,
        inputs,
        seeds,
        max_rounds: s.max_rounds,
        scheduler: s.scheduler.unwrap_or(SchedulerKind::RandomFair),
        adversary: s.adversary.unwrap_or(Strategy::Silent),
        auth: s.auth.unwrap_or(ShareAuth::Dealer),
    })
}

/// `A..B` (end exclusive) or a single seed `A`.
pub fn parse_seeds(text: &str) -> Result<Range<u64>> {
    let text = text.trim();
    let range = match text.split_once("..") {
        Some((a, b)) => {
            let a: u64 = a
                .trim()
                .parse()
                .with_context(|| format!("bad seed range start in `{text}`"))?;
            let b: u64 = b
                .trim()
                .parse()
                .with_context(|| format!("bad seed range end in `{text}`"))?;
            a..b
        }
        None => {
            let a: u64 = text.parse().with_context(|| format!("bad seed `{text}`"))?;
            a..a + 1
        }
    };
    if range.is_empty() {
        bail!("empty seed range `{text}`");
    }
    Ok(range)
}
