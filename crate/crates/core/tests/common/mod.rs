//! Brute-force reference implementations over raw bitmasks.
//!
//! Everything here enumerates the full power set, so it is only usable for
//! small `n`. None of it calls into the crate's combinatorics.

#![allow(dead_code)]

pub mod props;

use asymtrust::quorums::{AsymFailProneSystem, AsymQuorumSystem};
use asymtrust::{ProcessSet, SetFamily};

pub type Mask = u64;

pub fn full(n: usize) -> Mask {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

pub fn subset(a: Mask, b: Mask) -> bool {
    a & !b == 0
}

pub fn masks(f: &SetFamily) -> Vec<Mask> {
    f.iter().map(ProcessSet::bits).collect()
}

pub fn rows(af: &AsymFailProneSystem) -> Vec<Vec<Mask>> {
    af.systems().iter().map(masks).collect()
}

pub fn quorum_rows(aq: &AsymQuorumSystem) -> Vec<Vec<Mask>> {
    aq.systems().iter().map(masks).collect()
}

pub fn sorted(mut v: Vec<Mask>) -> Vec<Mask> {
    v.sort_unstable();
    v.dedup();
    v
}

/// Every subset of some member of `f`.
pub fn star(n: usize, f: &[Mask]) -> Vec<Mask> {
    (0..=full(n))
        .filter(|&s| f.iter().any(|&a| subset(s, a)))
        .collect()
}

pub fn q3(n: usize, f: &[Mask]) -> bool {
    let all = full(n);
    f.iter()
        .all(|a| f.iter().all(|b| f.iter().all(|c| a | b | c != all)))
}

/// Every set of `ℱ_i* ∩ ℱ_j*` enumerated explicitly.
fn common_star(n: usize, fi: &[Mask], fj: &[Mask]) -> Vec<Mask> {
    (0..=full(n))
        .filter(|&s| fi.iter().any(|&a| subset(s, a)) && fj.iter().any(|&b| subset(s, b)))
        .collect()
}

pub fn b3(n: usize, f: &[Vec<Mask>]) -> bool {
    let all = full(n);
    for fi in f {
        for fj in f {
            let common = common_star(n, fi, fj);
            for &a in fi {
                for &b in fj {
                    if common.iter().any(|&c| a | b | c == all) {
                        return false;
                    }
                }
            }
        }
    }
    true
}

pub fn complements(n: usize, f: &[Mask]) -> Vec<Mask> {
    f.iter().map(|&s| !s & full(n)).collect()
}

/// Consistency and availability of `q` for `f`, per process.
pub fn is_asym_quorum_system(n: usize, f: &[Vec<Mask>], q: &[Vec<Mask>]) -> bool {
    for i in 0..n {
        for j in 0..n {
            let common = common_star(n, &f[i], &f[j]);
            for &qi in &q[i] {
                for &qj in &q[j] {
                    if common.iter().any(|&c| subset(qi & qj, c)) {
                        return false;
                    }
                }
            }
        }
        for &fi in &f[i] {
            if !q[i].iter().any(|&qq| qq & fi == 0) {
                return false;
            }
        }
    }
    true
}

pub fn is_symmetric_quorum_system(n: usize, f: &[Mask], q: &[Mask]) -> bool {
    let fs = star(n, f);
    let consistent = q
        .iter()
        .all(|&a| q.iter().all(|&b| !fs.iter().any(|&c| subset(a & b, c))));
    consistent && f.iter().all(|&s| q.iter().any(|&qq| qq & s == 0))
}

pub fn hits_all(k: Mask, q: &[Mask]) -> bool {
    q.iter().all(|&s| s & k != 0)
}

/// Inclusion-minimal hitting sets, found by scanning the whole power set.
pub fn minimal_kernels(n: usize, q: &[Mask]) -> Vec<Mask> {
    let hitting: Vec<Mask> = (0..=full(n)).filter(|&k| hits_all(k, q)).collect();
    let min: Vec<Mask> = hitting
        .iter()
        .copied()
        .filter(|&k| !hitting.iter().any(|&o| o != k && subset(o, k)))
        .collect();
    sorted(min)
}

pub fn wise(n: usize, f: &[Vec<Mask>], faulty: Mask) -> Mask {
    (0..n)
        .filter(|&i| faulty >> i & 1 == 0 && f[i].iter().any(|&a| subset(faulty, a)))
        .fold(0, |acc, i| acc | 1 << i)
}

pub fn naive(n: usize, f: &[Vec<Mask>], faulty: Mask) -> Mask {
    full(n) & !faulty & !wise(n, f, faulty)
}

pub fn is_guild(n: usize, q: &[Vec<Mask>], wise: Mask, s: Mask) -> bool {
    s != 0
        && subset(s, wise)
        && (0..n)
            .filter(|&i| s >> i & 1 == 1)
            .all(|i| q[i].iter().any(|&qq| subset(qq, s)))
}

/// Every guild, by enumeration of all subsets of the wise processes.
pub fn guilds(n: usize, q: &[Vec<Mask>], wise: Mask) -> Vec<Mask> {
    (1..=full(n)).filter(|&s| is_guild(n, q, wise, s)).collect()
}

/// Closed-form quorum and minimal kernel sizes of the `(n, f)` threshold system.
pub fn threshold_sizes(n: usize, f: usize) -> (usize, usize) {
    let quorum = (n + f + 2) / 2;
    let kernel = (n - f).div_ceil(2);
    (quorum, kernel)
}

pub fn set(n: usize, xs: &[usize]) -> ProcessSet {
    ProcessSet::from_indices(n, xs.iter().map(|x| x - 1))
}

pub fn family(n: usize, xs: &[&[usize]]) -> SetFamily {
    SetFamily::new(n, xs.iter().map(|s| set(n, s))).unwrap()
}
