//! Fixed-capacity process sets and ordered set families.
//!
//! A [`ProcessSet`] is a 64-bit mask over process indices `0..n`. Every
//! fail-prone set, quorum, kernel and guild in the crate is one of these.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Index of a process, `0..n`. Displayed 1-based (`p1` is index 0).
pub type ProcessId = usize;

pub const MAX_PROCESSES: usize = 64;

/// A subset of the process universe `{0, .., n-1}`.
#[derive(Copy, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ProcessSet {
    bits: u64,
    n: u8,
}

fn universe_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 || n > MAX_PROCESSES {
        Err(Error::ProcessCount(n))
    } else {
        Ok(())
    }
}

impl ProcessSet {
    pub fn empty(n: usize) -> Self {
        assert!(
            (1..=MAX_PROCESSES).contains(&n),
            "process count {n} out of range"
        );
        ProcessSet {
            bits: 0,
            n: n as u8,
        }
    }

    pub fn full(n: usize) -> Self {
        let mut s = Self::empty(n);
        s.bits = universe_mask(n);
        s
    }

    pub fn singleton(n: usize, p: ProcessId) -> Self {
        let mut s = Self::empty(n);
        s.insert(p);
        s
    }

    /// Builds a set from raw bits, rejecting bits at or above `n`.
    pub fn from_bits(n: usize, bits: u64) -> Result<Self> {
        check_n(n)?;
        if bits & !universe_mask(n) != 0 {
            let index = 63 - bits.leading_zeros() as usize;
            return Err(Error::ProcessIndex { index, n });
        }
        Ok(ProcessSet { bits, n: n as u8 })
    }

    pub fn try_from_indices<I: IntoIterator<Item = ProcessId>>(n: usize, it: I) -> Result<Self> {
        check_n(n)?;
        let mut s = ProcessSet {
            bits: 0,
            n: n as u8,
        };
        for p in it {
            if p >= n {
                return Err(Error::ProcessIndex { index: p, n });
            }
            s.bits |= 1 << p;
        }
        Ok(s)
    }

    /// Panicking variant of [`ProcessSet::try_from_indices`] for literals.
    pub fn from_indices<I: IntoIterator<Item = ProcessId>>(n: usize, it: I) -> Self {
        Self::try_from_indices(n, it).expect("process index out of range")
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones() as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_full(&self) -> bool {
        self.bits == universe_mask(self.n())
    }

    pub fn contains(&self, p: ProcessId) -> bool {
        p < self.n() && self.bits & (1 << p) != 0
    }

    pub fn insert(&mut self, p: ProcessId) {
        assert!(p < self.n(), "process {p} out of range for n = {}", self.n);
        self.bits |= 1 << p;
    }

    pub fn remove(&mut self, p: ProcessId) {
        if p < self.n() {
            self.bits &= !(1 << p);
        }
    }

    pub fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        ProcessSet {
            bits: self.bits | other.bits,
            n: self.n,
        }
    }

    pub fn intersection(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        ProcessSet {
            bits: self.bits & other.bits,
            n: self.n,
        }
    }

    pub fn difference(&self, other: &Self) -> Self {
        debug_assert_eq!(self.n, other.n);
        ProcessSet {
            bits: self.bits & !other.bits,
            n: self.n,
        }
    }

    pub fn complement(&self) -> Self {
        ProcessSet {
            bits: !self.bits & universe_mask(self.n()),
            n: self.n,
        }
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.bits & !other.bits == 0
    }

    pub fn is_superset(&self, other: &Self) -> bool {
        other.is_subset(self)
    }

    pub fn intersects(&self, other: &Self) -> bool {
        self.bits & other.bits != 0
    }

    /// Position of `p` among the members of this set in increasing index order.
    pub fn rank(&self, p: ProcessId) -> Option<usize> {
        if !self.contains(p) {
            return None;
        }
        Some((self.bits & ((1u64 << p) - 1)).count_ones() as usize)
    }

    pub fn iter(&self) -> impl Iterator<Item = ProcessId> + '_ {
        let bits = self.bits;
        (0..self.n()).filter(move |p| bits & (1 << p) != 0)
    }

    /// All subsets of `{0..n}` with exactly `k` members, in increasing bit order.
    pub fn k_subsets(n: usize, k: usize) -> impl Iterator<Item = ProcessSet> {
        let members: Vec<ProcessId> = (0..n).collect();
        Self::k_subsets_of(n, members, k).into_iter()
    }

    /// All `k`-subsets of `members`, in lexicographic order of positions in `members`.
    pub fn k_subsets_of(n: usize, members: Vec<ProcessId>, k: usize) -> Vec<ProcessSet> {
        let mut out = Vec::new();
        if k > members.len() {
            return out;
        }
        let m = members.len();
        let mut idx: Vec<usize> = (0..k).collect();
        loop {
            out.push(ProcessSet::from_indices(n, idx.iter().map(|&i| members[i])));
            // rightmost position that can still move right
            let mut i = k;
            while i > 0 && idx[i - 1] == i - 1 + m - k {
                i -= 1;
            }
            if i == 0 {
                return out;
            }
            idx[i - 1] += 1;
            for j in i..k {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
}

impl fmt::Debug for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for ProcessSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, p) in self.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "p{}", p + 1)?;
        }
        f.write_str("}")
    }
}

/// An ordered, duplicate-free collection of process sets over a common `n`.
///
/// Used for fail-prone systems, quorum systems and kernel systems. Order is
/// meaningful: quorum identifiers refer to positions.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SetFamily {
    n: usize,
    members: Vec<ProcessSet>,
}

impl SetFamily {
    pub fn empty(n: usize) -> Self {
        assert!(
            (1..=MAX_PROCESSES).contains(&n),
            "process count {n} out of range"
        );
        SetFamily {
            n,
            members: Vec::new(),
        }
    }

    /// Collects `sets`, keeping first occurrences only.
    pub fn new<I: IntoIterator<Item = ProcessSet>>(n: usize, sets: I) -> Result<Self> {
        check_n(n)?;
        let mut fam = SetFamily {
            n,
            members: Vec::new(),
        };
        for s in sets {
            if s.n() != n {
                return Err(Error::SizeMismatch {
                    left: n,
                    right: s.n(),
                });
            }
            fam.push(s);
        }
        Ok(fam)
    }

    /// Convenience constructor from index lists; panics on bad input.
    pub fn from_lists(n: usize, lists: &[&[ProcessId]]) -> Self {
        Self::new(
            n,
            lists
                .iter()
                .map(|l| ProcessSet::from_indices(n, l.iter().copied())),
        )
        .expect("invalid family literal")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[ProcessSet] {
        &self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, ProcessSet> {
        self.members.iter()
    }

    pub fn get(&self, k: usize) -> Option<&ProcessSet> {
        self.members.get(k)
    }

    pub fn position(&self, s: &ProcessSet) -> Option<usize> {
        self.members.iter().position(|m| m == s)
    }

    /// Appends `s` unless already present. Returns whether it was added.
    pub fn push(&mut self, s: ProcessSet) -> bool {
        assert_eq!(s.n(), self.n, "set over wrong universe");
        if self.members.contains(&s) {
            false
        } else {
            self.members.push(s);
            true
        }
    }

    pub fn contains(&self, s: &ProcessSet) -> bool {
        self.members.contains(s)
    }

    /// True if some member is a subset of `s` (membership in the upward closure).
    pub fn has_member_within(&self, s: &ProcessSet) -> bool {
        self.members.iter().any(|m| m.is_subset(s))
    }

    /// True if `s` is a subset of some member (membership in the downward closure `A*`).
    pub fn covers(&self, s: &ProcessSet) -> bool {
        self.members.iter().any(|m| s.is_subset(m))
    }

    pub fn is_antichain(&self) -> bool {
        self.members.iter().enumerate().all(|(i, a)| {
            self.members
                .iter()
                .enumerate()
                .all(|(j, b)| i == j || !a.is_subset(b))
        })
    }

    /// Members sorted by bit pattern, for order-insensitive comparison.
    pub fn sorted(&self) -> SetFamily {
        let mut members = self.members.clone();
        members.sort();
        SetFamily { n: self.n, members }
    }

    /// Equality as sets of sets, ignoring order.
    pub fn same_members(&self, other: &SetFamily) -> bool {
        self.n == other.n && self.sorted().members == other.sorted().members
    }
}

impl fmt::Debug for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for SetFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.members.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

impl<'a> IntoIterator for &'a SetFamily {
    type Item = &'a ProcessSet;
    type IntoIter = std::slice::Iter<'a, ProcessSet>;

    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_algebra() {
        let a = ProcessSet::from_indices(5, [0, 1, 2]);
        let b = ProcessSet::from_indices(5, [2, 3]);
        assert_eq!(a.union(&b), ProcessSet::from_indices(5, [0, 1, 2, 3]));
        assert_eq!(a.intersection(&b), ProcessSet::singleton(5, 2));
        assert_eq!(a.difference(&b), ProcessSet::from_indices(5, [0, 1]));
        assert_eq!(a.complement(), ProcessSet::from_indices(5, [3, 4]));
        assert!(ProcessSet::singleton(5, 2).is_subset(&a));
        assert!(!b.is_subset(&a));
        assert_eq!(a.len(), 3);
        assert_eq!(a.to_string(), "{p1,p2,p3}");
        assert_eq!(b.rank(3), Some(1));
        assert_eq!(b.rank(0), None);
    }

    #[test]
    fn full_universe_of_64() {
        let s = ProcessSet::full(64);
        assert_eq!(s.len(), 64);
        assert!(s.complement().is_empty());
        assert!(s.is_full());
    }

    #[test]
    fn out_of_range_bits_rejected() {
        assert_eq!(
            ProcessSet::from_bits(3, 0b1000),
            Err(Error::ProcessIndex { index: 3, n: 3 })
        );
        assert!(ProcessSet::try_from_indices(0, []).is_err());
        assert!(ProcessSet::try_from_indices(65, []).is_err());
    }

    #[test]
    fn k_subsets_counts() {
        assert_eq!(ProcessSet::k_subsets(5, 2).count(), 10);
        assert_eq!(ProcessSet::k_subsets(7, 5).count(), 21);
        assert_eq!(
            ProcessSet::k_subsets(4, 0).collect::<Vec<_>>(),
            vec![ProcessSet::empty(4)]
        );
        assert_eq!(ProcessSet::k_subsets(3, 4).count(), 0);
        let subs = ProcessSet::k_subsets_of(6, vec![1, 3, 4], 2);
        assert_eq!(
            subs,
            vec![
                ProcessSet::from_indices(6, [1, 3]),
                ProcessSet::from_indices(6, [1, 4]),
                ProcessSet::from_indices(6, [3, 4]),
            ]
        );
    }

    #[test]
    fn family_deduplicates() {
        let s = ProcessSet::from_indices(3, [0]);
        let fam = SetFamily::new(3, [s, s]).unwrap();
        assert_eq!(fam.len(), 1);
        assert!(SetFamily::new(3, [ProcessSet::empty(4)]).is_err());
    }
}
