//! Quorum-system properties as reusable checks over generated systems.

use asymtrust::quorums::{
    asym_canonical_quorums, canonical_quorums, check_b3, check_q3, classify_with_guild, is_kernel,
    kernel_within_quorum, maximal_guild, minimal_kernels, verify_asym_quorum_system,
    verify_symmetric, AsymFailProneSystem, AsymQuorumSystem,
};
use asymtrust::{ProcessSet, SetFamily};
use proptest::prelude::*;
use proptest::test_runner::TestCaseError;

use super::*;

pub fn family_of(n: usize, sets: &[u64]) -> SetFamily {
    SetFamily::new(
        n,
        sets.iter().map(|&b| ProcessSet::from_bits(n, b).unwrap()),
    )
    .unwrap()
}

pub fn system_of(n: usize, rows: &[Vec<u64>]) -> AsymFailProneSystem {
    AsymFailProneSystem::new(n, rows.iter().map(|r| family_of(n, r)).collect()).unwrap()
}

/// Masks with each process present with probability 1/2 or 1/4.
pub fn any_mask(n: usize) -> BoxedStrategy<u64> {
    let m = full(n);
    prop_oneof![0..=m, (0..=m, 0..=m).prop_map(|(a, b)| a & b)].boxed()
}

/// Masks with each process present with probability 1/8, small enough that
/// most systems built from them have canonical quorums.
pub fn sparse_mask(n: usize) -> BoxedStrategy<u64> {
    let m = full(n);
    (0..=m, 0..=m, 0..=m)
        .prop_map(|(a, b, c)| a & b & c)
        .boxed()
}

pub fn symmetric_system() -> impl Strategy<Value = (usize, Vec<u64>)> {
    (2usize..=7).prop_flat_map(|n| (Just(n), prop::collection::vec(any_mask(n), 1..=5)))
}

pub fn asym_system(
    mask: fn(usize) -> BoxedStrategy<u64>,
) -> impl Strategy<Value = (usize, Vec<Vec<u64>>)> {
    (2usize..=7).prop_flat_map(move |n| {
        (
            Just(n),
            prop::collection::vec(prop::collection::vec(mask(n), 1..=3), n),
        )
    })
}

/// A system with canonical quorums and an actual faulty set covered by one
/// of its fail-prone sets.
pub fn execution() -> impl Strategy<Value = (usize, Vec<Vec<u64>>, u64)> {
    asym_system(sparse_mask)
        .prop_filter("B3 must hold", |(n, rows)| b3(*n, rows))
        .prop_flat_map(|(n, rows)| {
            let sets: Vec<u64> = rows.iter().flatten().copied().collect();
            let m = full(n);
            (Just(n), Just(rows), prop::sample::select(sets), 0..=m)
                .prop_map(|(n, rows, f, keep)| (n, rows, f & keep))
        })
}

pub fn complement_system(af: &AsymFailProneSystem) -> AsymQuorumSystem {
    let n = af.n();
    let rows = af
        .systems()
        .iter()
        .map(|f| family_of(n, &complements(n, &masks(f))))
        .collect();
    AsymQuorumSystem::new(n, rows).unwrap()
}

pub fn config() -> ProptestConfig {
    ProptestConfig {
        cases: 256,
        max_global_rejects: 200_000,
        ..ProptestConfig::default()
    }
}

pub fn q3_iff_canonical_is_a_quorum_system_holds(
    (n, sets): (usize, Vec<u64>),
) -> Result<(), TestCaseError> {
    let f = family_of(n, &sets);
    let holds = q3(n, &sets);
    prop_assert_eq!(check_q3(&f), holds);
    prop_assert_eq!(
        is_symmetric_quorum_system(n, &sets, &complements(n, &sets)),
        holds
    );
    match canonical_quorums(&f) {
        Ok(q) => {
            prop_assert!(holds);
            prop_assert_eq!(sorted(masks(&q)), sorted(complements(n, &sets)));
            prop_assert!(verify_symmetric(&f, &q).is_empty());
        }
        Err(_) => prop_assert!(!holds),
    }
    let complement = family_of(n, &complements(n, &sets));
    prop_assert_eq!(verify_symmetric(&f, &complement).is_empty(), holds);
    Ok(())
}

pub fn b3_iff_canonical_is_an_asymmetric_quorum_system_holds(
    (n, raw): (usize, Vec<Vec<u64>>),
) -> Result<(), TestCaseError> {
    let af = system_of(n, &raw);
    let f = rows(&af);
    let holds = b3(n, &f);
    prop_assert_eq!(check_b3(&af), holds);
    let canonical: Vec<Vec<Mask>> = f.iter().map(|r| complements(n, r)).collect();
    prop_assert_eq!(is_asym_quorum_system(n, &f, &canonical), holds);
    prop_assert_eq!(
        verify_asym_quorum_system(&af, &complement_system(&af)).is_empty(),
        holds
    );
    prop_assert_eq!(asym_canonical_quorums(&af).is_ok(), holds);
    Ok(())
}

pub fn quorum_minus_fail_prone_set_is_a_kernel_holds(
    (n, raw): (usize, Vec<Vec<u64>>),
) -> Result<(), TestCaseError> {
    let af = system_of(n, &raw);
    prop_assume!(b3(n, &rows(&af)));
    let aq = asym_canonical_quorums(&af).unwrap();
    for i in 0..n {
        let qs = masks(aq.get(i));
        for fi in af.get(i) {
            for q in aq.get(i) {
                let k = kernel_within_quorum(fi, q);
                prop_assert!(k.is_subset(q));
                prop_assert!(hits_all(k.bits(), &qs));
                prop_assert!(is_kernel(&k, aq.get(i)));
            }
        }
        if qs.iter().all(|&q| q != 0) {
            let got = minimal_kernels(aq.get(i)).unwrap();
            prop_assert_eq!(sorted(masks(&got)), super::minimal_kernels(n, &qs));
        }
    }
    Ok(())
}

pub fn guilds_overlap_and_union_to_the_maximal_guild_holds(
    (n, raw, faulty): (usize, Vec<Vec<u64>>, u64),
) -> Result<(), TestCaseError> {
    let af = system_of(n, &raw);
    let aq = asym_canonical_quorums(&af).unwrap();
    let faulty_set = ProcessSet::from_bits(n, faulty).unwrap();
    let class = classify_with_guild(&af, &aq, &faulty_set);
    let w = wise(n, &rows(&af), faulty);
    prop_assert_eq!(class.wise.bits(), w);
    prop_assert_eq!(class.naive.bits(), naive(n, &rows(&af), faulty));
    let all = guilds(n, &quorum_rows(&aq), w);
    for (a_idx, &a) in all.iter().enumerate() {
        for &b in &all[a_idx + 1..] {
            prop_assert!(a & b != 0, "disjoint guilds {:b} {:b}", a, b);
        }
    }
    let union = all.iter().fold(0, |acc, g| acc | g);
    prop_assert_eq!(
        maximal_guild(&aq, &class.wise)
            .map(|g| g.bits())
            .unwrap_or(0),
        union
    );
    prop_assert_eq!(class.maximal_guild.map(|g| g.bits()).unwrap_or(0), union);
    if union != 0 {
        prop_assert!(is_guild(n, &quorum_rows(&aq), w, union));
    }
    Ok(())
}

pub fn no_quorum_is_entirely_faulty_holds(
    (n, raw, faulty): (usize, Vec<Vec<u64>>, u64),
) -> Result<(), TestCaseError> {
    let af = system_of(n, &raw);
    let aq = asym_canonical_quorums(&af).unwrap();
    let w = wise(n, &rows(&af), faulty);
    prop_assume!(!guilds(n, &quorum_rows(&aq), w).is_empty());
    for (j, qs) in quorum_rows(&aq).iter().enumerate() {
        for &q in qs {
            prop_assert!(
                !subset(q, faulty),
                "quorum {:b} of p{} inside faulty {:b}",
                q,
                j + 1,
                faulty
            );
        }
    }
    Ok(())
}

pub fn every_correct_quorum_meets_the_maximal_guild_holds(
    (n, raw, faulty): (usize, Vec<Vec<u64>>, u64),
) -> Result<(), TestCaseError> {
    let af = system_of(n, &raw);
    let aq = asym_canonical_quorums(&af).unwrap();
    let w = wise(n, &rows(&af), faulty);
    let guild = guilds(n, &quorum_rows(&aq), w)
        .into_iter()
        .fold(0, |acc, g| acc | g);
    prop_assume!(guild != 0);
    for (i, qs) in quorum_rows(&aq).iter().enumerate() {
        if faulty >> i & 1 == 1 {
            continue;
        }
        for &q in qs {
            prop_assert!(
                q & guild != 0,
                "quorum {:b} of p{} misses guild {:b}",
                q,
                i + 1,
                guild
            );
        }
    }
    Ok(())
}
