//! Fail-prone systems, quorum systems and the combinatorics around them.
//!
//! Symmetric systems are single [`SetFamily`] values. Asymmetric systems hold
//! one family per process. The symmetric case embeds into the asymmetric one
//! by giving every process the same family.

use std::collections::HashMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::process_set::{ProcessId, ProcessSet, SetFamily};

/// Largest `n` accepted by [`minimal_kernels`].
pub const KERNEL_ENUMERATION_CAP: usize = 16;

/// Maximal elements of `raw`, deduplicated and sorted by bit pattern.
pub fn normalize_antichain(raw: &SetFamily) -> SetFamily {
    let mut sets: Vec<ProcessSet> = raw.members().to_vec();
    sets.sort();
    sets.dedup();
    let keep: Vec<ProcessSet> = sets
        .iter()
        .filter(|a| !sets.iter().any(|b| b != *a && a.is_subset(b)))
        .copied()
        .collect();
    SetFamily::new(raw.n(), keep).expect("members share n")
}

/// Q3: no three (not necessarily distinct) members cover the universe.
pub fn check_q3(f: &SetFamily) -> bool {
    let full = ProcessSet::full(f.n());
    let m = f.members();
    for (a_idx, a) in m.iter().enumerate() {
        for (b_idx, b) in m.iter().enumerate().skip(a_idx) {
            let ab = a.union(b);
            for c in &m[b_idx..] {
                if ab.union(c) == full {
                    return false;
                }
            }
        }
    }
    true
}

/// One fail-prone system per process.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AsymFailProneSystem {
    n: usize,
    systems: Vec<SetFamily>,
}

impl AsymFailProneSystem {
    /// Normalizes every row to an antichain. An empty row becomes `{∅}`.
    pub fn new(n: usize, systems: Vec<SetFamily>) -> Result<Self> {
        if systems.len() != n {
            return Err(Error::SystemCount {
                expected: n,
                got: systems.len(),
            });
        }
        let mut rows = Vec::with_capacity(n);
        for s in systems {
            if s.n() != n {
                return Err(Error::SizeMismatch {
                    left: n,
                    right: s.n(),
                });
            }
            let mut row = normalize_antichain(&s);
            if row.is_empty() {
                row.push(ProcessSet::empty(n));
            }
            rows.push(row);
        }
        Ok(AsymFailProneSystem { n, systems: rows })
    }

    /// Every process trusts the same family.
    pub fn uniform(f: &SetFamily) -> Self {
        Self::new(f.n(), vec![f.clone(); f.n()]).expect("uniform rows are well formed")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn systems(&self) -> &[SetFamily] {
        &self.systems
    }

    pub fn get(&self, i: ProcessId) -> &SetFamily {
        &self.systems[i]
    }
}

/// One quorum system per process. Member order is significant: it fixes
/// quorum identifiers used by the coin.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AsymQuorumSystem {
    n: usize,
    systems: Vec<SetFamily>,
}

impl AsymQuorumSystem {
    pub fn new(n: usize, systems: Vec<SetFamily>) -> Result<Self> {
        if systems.len() != n {
            return Err(Error::SystemCount {
                expected: n,
                got: systems.len(),
            });
        }
        if let Some(s) = systems.iter().find(|s| s.n() != n) {
            return Err(Error::SizeMismatch {
                left: n,
                right: s.n(),
            });
        }
        Ok(AsymQuorumSystem { n, systems })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn systems(&self) -> &[SetFamily] {
        &self.systems
    }

    pub fn get(&self, i: ProcessId) -> &SetFamily {
        &self.systems[i]
    }

    /// Does `s` contain a quorum of `i`?
    pub fn contains_quorum(&self, i: ProcessId, s: &ProcessSet) -> bool {
        self.systems[i].has_member_within(s)
    }
}

/// Maximal elements of `{A ∩ B : A ∈ a, B ∈ b}`, the generators of `a* ∩ b*`.
pub fn maximal_intersections(a: &SetFamily, b: &SetFamily) -> SetFamily {
    let mut raw = SetFamily::empty(a.n());
    for x in a {
        for y in b {
            raw.push(x.intersection(y));
        }
    }
    normalize_antichain(&raw)
}

fn b3_pair(full: ProcessSet, fi: &SetFamily, fj: &SetFamily) -> bool {
    let common = maximal_intersections(fi, fj);
    for a in fi {
        for b in fj {
            let ab = a.union(b);
            if common.iter().any(|c| ab.union(c) == full) {
                return false;
            }
        }
    }
    true
}

/// B3 over all ordered pairs of processes, including `i = j`.
pub fn check_b3(af: &AsymFailProneSystem) -> bool {
    let full = ProcessSet::full(af.n());
    // identical rows are common (threshold systems), so check each distinct pair once
    let mut distinct: Vec<&SetFamily> = Vec::new();
    let mut class = Vec::with_capacity(af.n());
    for row in af.systems() {
        let idx = match distinct.iter().position(|d| *d == row) {
            Some(k) => k,
            None => {
                distinct.push(row);
                distinct.len() - 1
            }
        };
        class.push(idx);
    }
    let mut seen: HashMap<(usize, usize), bool> = HashMap::new();
    for &ci in &class {
        for &cj in &class {
            let key = (ci.min(cj), ci.max(cj));
            let ok = *seen
                .entry(key)
                .or_insert_with(|| b3_pair(full, distinct[key.0], distinct[key.1]));
            if !ok {
                return false;
            }
        }
    }
    true
}

/// Complements of the members of `f`. An empty `f` is read as `{∅}`.
pub fn canonical_quorums(f: &SetFamily) -> Result<SetFamily> {
    if f.is_empty() {
        return SetFamily::new(f.n(), [ProcessSet::full(f.n())]);
    }
    if !check_q3(f) {
        return Err(Error::Q3Violated);
    }
    SetFamily::new(f.n(), f.iter().map(|s| s.complement()))
}

pub fn asym_canonical_quorums(af: &AsymFailProneSystem) -> Result<AsymQuorumSystem> {
    if !check_b3(af) {
        return Err(Error::B3Violated);
    }
    let rows = af
        .systems()
        .iter()
        .map(|f| SetFamily::new(af.n(), f.iter().map(|s| s.complement())))
        .collect::<Result<Vec<_>>>()?;
    AsymQuorumSystem::new(af.n(), rows)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyViolation {
    pub i: ProcessId,
    pub j: ProcessId,
    pub qi: ProcessSet,
    pub qj: ProcessSet,
    /// A set of `ℱ_i* ∩ ℱ_j*` containing `qi ∩ qj`.
    pub fij: ProcessSet,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AvailabilityViolation {
    pub i: ProcessId,
    /// A fail-prone set of `i` that meets every quorum of `i`.
    pub fi: ProcessSet,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Report {
    pub consistency: Vec<ConsistencyViolation>,
    pub availability: Vec<AvailabilityViolation>,
}

impl Report {
    pub fn is_empty(&self) -> bool {
        self.consistency.is_empty() && self.availability.is_empty()
    }
}

/// Checks consistency and availability of `aq` against `af`.
pub fn verify_asym_quorum_system(af: &AsymFailProneSystem, aq: &AsymQuorumSystem) -> Report {
    assert_eq!(
        af.n(),
        aq.n(),
        "fail-prone and quorum systems over different n"
    );
    let mut report = Report::default();
    let n = af.n();
    for i in 0..n {
        for j in 0..n {
            let common = maximal_intersections(af.get(i), af.get(j));
            for qi in aq.get(i) {
                for qj in aq.get(j) {
                    let meet = qi.intersection(qj);
                    if let Some(fij) = common.iter().find(|c| meet.is_subset(c)) {
                        report.consistency.push(ConsistencyViolation {
                            i,
                            j,
                            qi: *qi,
                            qj: *qj,
                            fij: *fij,
                        });
                    }
                }
            }
        }
        for fi in af.get(i) {
            if !aq.get(i).iter().any(|q| !q.intersects(fi)) {
                report
                    .availability
                    .push(AvailabilityViolation { i, fi: *fi });
            }
        }
    }
    report
}

/// The symmetric check: every process shares `f` and `q`.
pub fn verify_symmetric(f: &SetFamily, q: &SetFamily) -> Report {
    let mut report = Report::default();
    for (a, qa) in q.iter().enumerate() {
        for qb in &q.members()[a..] {
            let meet = qa.intersection(qb);
            if let Some(bad) = f.iter().find(|s| meet.is_subset(s)) {
                report.consistency.push(ConsistencyViolation {
                    i: 0,
                    j: 0,
                    qi: *qa,
                    qj: *qb,
                    fij: *bad,
                });
            }
        }
    }
    for s in f {
        if !q.iter().any(|qq| !qq.intersects(s)) {
            report
                .availability
                .push(AvailabilityViolation { i: 0, fi: *s });
        }
    }
    report
}

/// `k` meets every member of `q`.
pub fn is_kernel(k: &ProcessSet, q: &SetFamily) -> bool {
    q.iter().all(|s| s.intersects(k))
}

/// All minimal hitting sets of `q`, smallest first.
pub fn minimal_kernels(q: &SetFamily) -> Result<SetFamily> {
    let n = q.n();
    if n > KERNEL_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            n,
            cap: KERNEL_ENUMERATION_CAP,
        });
    }
    if q.is_empty() || q.iter().any(|s| s.is_empty()) {
        return Err(Error::DegenerateQuorums);
    }
    // a minimal hitting set only uses processes that occur in some quorum
    let support = q.iter().fold(ProcessSet::empty(n), |acc, s| acc.union(s));
    let members: Vec<ProcessId> = support.iter().collect();
    let mut found: Vec<ProcessSet> = Vec::new();
    for k in 1..=members.len() {
        for cand in ProcessSet::k_subsets_of(n, members.clone(), k) {
            if found.iter().any(|m| m.is_subset(&cand)) {
                continue;
            }
            if is_kernel(&cand, q) {
                found.push(cand);
            }
        }
    }
    SetFamily::new(n, found)
}

/// A kernel inside `q` surviving the failure of `f`.
pub fn kernel_within_quorum(f: &ProcessSet, q: &ProcessSet) -> ProcessSet {
    q.difference(f)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Classification {
    pub faulty: ProcessSet,
    pub naive: ProcessSet,
    pub wise: ProcessSet,
    pub maximal_guild: Option<ProcessSet>,
}

/// Splits the correct processes into wise and naive for the faulty set `faulty`.
pub fn classify(af: &AsymFailProneSystem, faulty: &ProcessSet) -> Classification {
    let n = af.n();
    let mut wise = ProcessSet::empty(n);
    let mut naive = ProcessSet::empty(n);
    for i in 0..n {
        if faulty.contains(i) {
            continue;
        }
        if af.get(i).covers(faulty) {
            wise.insert(i);
        } else {
            naive.insert(i);
        }
    }
    Classification {
        faulty: *faulty,
        naive,
        wise,
        maximal_guild: None,
    }
}

/// Classification with the maximal guild filled in.
pub fn classify_with_guild(
    af: &AsymFailProneSystem,
    aq: &AsymQuorumSystem,
    faulty: &ProcessSet,
) -> Classification {
    let mut c = classify(af, faulty);
    c.maximal_guild = maximal_guild(aq, &c.wise);
    c
}

/// `s` is non-empty, wise, and holds a quorum of each of its members.
pub fn is_guild(aq: &AsymQuorumSystem, wise: &ProcessSet, s: &ProcessSet) -> bool {
    !s.is_empty() && s.is_subset(wise) && s.iter().all(|p| aq.contains_quorum(p, s))
}

/// Greatest subset of `wise` that holds a quorum of each of its members.
pub fn maximal_guild(aq: &AsymQuorumSystem, wise: &ProcessSet) -> Option<ProcessSet> {
    let mut s = *wise;
    loop {
        let drop: Vec<ProcessId> = s.iter().filter(|&p| !aq.contains_quorum(p, &s)).collect();
        if drop.is_empty() {
            break;
        }
        for p in drop {
            s.remove(p);
        }
    }
    (!s.is_empty()).then_some(s)
}

/// Why wise `p` is outside `guild`: the first quorum of `p` and one of its
/// members outside the guild.
pub fn guild_exclusion(
    aq: &AsymQuorumSystem,
    guild: &ProcessSet,
    p: ProcessId,
) -> Option<(ProcessSet, ProcessId)> {
    if guild.contains(p) {
        return None;
    }
    let q = aq.get(p).iter().next()?;
    let outsider = q.iter().find(|x| !guild.contains(*x))?;
    Some((*q, outsider))
}

/// Every process fears any `f` others: `ℱ_i` is all `f`-subsets.
pub fn threshold_system(n: usize, f: usize) -> Result<AsymFailProneSystem> {
    if n == 0 || n > crate::process_set::MAX_PROCESSES {
        return Err(Error::ProcessCount(n));
    }
    if f > n {
        return Err(Error::Threshold { n, f });
    }
    let fam = SetFamily::new(n, ProcessSet::k_subsets(n, f))?;
    Ok(AsymFailProneSystem::uniform(&fam))
}
