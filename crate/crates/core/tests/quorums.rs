mod common;

use asymtrust::dsl::{eval_str, format_family, parse_system, Roster};
use asymtrust::fixtures::seven_process;
use asymtrust::quorums::{
    asym_canonical_quorums, check_b3, classify_with_guild, guild_exclusion, minimal_kernels,
    threshold_system, verify_asym_quorum_system, AsymQuorumSystem,
};
use asymtrust::{ProcessSet, SetFamily};
use common::*;
use proptest::prelude::*;

fn seven_process_quorum_table() -> Vec<Vec<Vec<usize>>> {
    vec![
        vec![vec![1, 3, 5], vec![1, 3, 4], vec![1, 2, 3]],
        vec![vec![1, 2, 5], vec![1, 2, 4], vec![1, 2, 3]],
        vec![vec![2, 3, 5], vec![2, 3, 4], vec![1, 2, 3]],
        vec![
            vec![1, 2, 3, 4],
            vec![1, 2, 4, 5],
            vec![1, 3, 4, 5],
            vec![2, 3, 4, 5],
        ],
        vec![
            vec![1, 2, 3, 5],
            vec![1, 2, 4, 5],
            vec![1, 3, 4, 5],
            vec![2, 3, 4, 5],
        ],
        vec![vec![2, 4, 5, 6]],
        vec![vec![1, 2, 6, 7]],
    ]
}

#[test]
fn seven_process_canonical_table() {
    let af = seven_process();
    assert!(check_b3(&af));
    assert!(b3(7, &rows(&af)));
    let aq = asym_canonical_quorums(&af).unwrap();
    for (i, expected) in seven_process_quorum_table().iter().enumerate() {
        let want = sorted(expected.iter().map(|s| set(7, s).bits()).collect());
        assert_eq!(sorted(masks(aq.get(i))), want, "quorums of p{}", i + 1);
    }
    assert!(verify_asym_quorum_system(&af, &aq).is_empty());
    assert!(is_asym_quorum_system(7, &rows(&af), &quorum_rows(&aq)));
}

#[test]
fn seven_process_classification() {
    let af = seven_process();
    let aq = asym_canonical_quorums(&af).unwrap();
    let faulty = set(7, &[4, 5]);
    let c = classify_with_guild(&af, &aq, &faulty);
    assert_eq!(c.wise, set(7, &[1, 2, 3, 7]));
    assert_eq!(c.naive, set(7, &[6]));
    assert_eq!(c.maximal_guild, Some(set(7, &[1, 2, 3])));

    let f = rows(&af);
    let q = quorum_rows(&aq);
    assert_eq!(c.wise.bits(), wise(7, &f, faulty.bits()));
    assert_eq!(c.naive.bits(), naive(7, &f, faulty.bits()));
    let union = guilds(7, &q, c.wise.bits())
        .into_iter()
        .fold(0, |a, g| a | g);
    assert_eq!(union, set(7, &[1, 2, 3]).bits());

    let (quorum, outsider) = guild_exclusion(&aq, &c.maximal_guild.unwrap(), 6).unwrap();
    assert_eq!(quorum, set(7, &[1, 2, 6, 7]));
    assert_eq!(outsider, 5, "p7 is kept out by naive p6");
}

#[test]
fn threshold_sizes_match_closed_form() {
    for f in 1..=3 {
        let n = 3 * f + 1;
        let af = threshold_system(n, f).unwrap();
        let aq = asym_canonical_quorums(&af).unwrap();
        let (q_size, k_size) = threshold_sizes(n, f);
        assert_eq!((q_size, k_size), (2 * f + 1, f + 1));
        for i in 0..n {
            assert!(aq.get(i).iter().all(|q| q.len() == q_size));
            assert_eq!(aq.get(i).len(), binomial(n, f));
        }
        let kernels = minimal_kernels(aq.get(0)).unwrap();
        assert!(kernels.iter().all(|k| k.len() == k_size));
        assert_eq!(
            sorted(masks(&kernels)),
            minimal_kernels_oracle(n, aq.get(0))
        );
    }
}

fn minimal_kernels_oracle(n: usize, q: &SetFamily) -> Vec<Mask> {
    common::minimal_kernels(n, &masks(q))
}

fn binomial(n: usize, k: usize) -> usize {
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

#[test]
fn threshold_3_1_has_no_quorum_system() {
    let af = threshold_system(3, 1).unwrap();
    assert!(!check_b3(&af));
    assert!(!b3(3, &rows(&af)));
    assert!(asym_canonical_quorums(&af).is_err());
}

#[test]
fn explicit_quorums_are_checked_against_the_oracle() {
    let af = threshold_system(4, 1).unwrap();
    let pairs = SetFamily::new(4, ProcessSet::k_subsets(4, 2)).unwrap();
    let aq = AsymQuorumSystem::new(4, vec![pairs; 4]).unwrap();
    let report = verify_asym_quorum_system(&af, &aq);
    assert!(!report.consistency.is_empty());
    assert!(report.availability.is_empty());
    assert!(!is_asym_quorum_system(4, &rows(&af), &quorum_rows(&aq)));
}

#[test]
fn shrunk_row_reports_the_fail_prone_sets_it_meets() {
    let af = seven_process();
    let mut systems = asym_canonical_quorums(&af).unwrap().systems().to_vec();
    let q = set(7, &[1, 3, 5]);
    systems[0] = SetFamily::new(7, [q]).unwrap();
    let aq = AsymQuorumSystem::new(7, systems).unwrap();
    let report = verify_asym_quorum_system(&af, &aq);
    let mut got: Vec<ProcessSet> = report
        .availability
        .iter()
        .inspect(|v| assert_eq!(v.i, 0))
        .map(|v| v.fi)
        .collect();
    got.sort();
    let mut expected: Vec<ProcessSet> = af
        .get(0)
        .iter()
        .filter(|f| f.intersects(&q))
        .copied()
        .collect();
    expected.sort();
    assert_eq!(got, expected);
    assert_eq!(expected, vec![set(7, &[2, 5, 6, 7]), set(7, &[4, 5, 6, 7])]);
    assert!(!got.contains(&set(7, &[2, 4, 6, 7])));
}

#[test]
fn seven_process_rows_round_trip_through_formatting() {
    let roster = Roster::numbered(7);
    let af = seven_process();
    let rendered: Vec<String> = af
        .systems()
        .iter()
        .map(|f| format_family(f, &roster))
        .collect();
    assert_eq!(parse_system(&rendered, &roster).unwrap(), af);
}

fn small_family() -> impl Strategy<Value = (usize, Vec<u64>)> {
    (1usize..=7).prop_flat_map(|n| (Just(n), prop::collection::vec(0..(1u64 << n), 0..6)))
}

proptest! {
    #[test]
    fn literal_union_lists_evaluate_to_maximal_sets((n, sets) in small_family()) {
        let roster = Roster::numbered(n);
        let fam = SetFamily::new(n, sets.iter().map(|&b| ProcessSet::from_bits(n, b).unwrap())).unwrap();
        let text = format!(
            "[{}]",
            fam.iter().map(|s| roster.format_set(s)).collect::<Vec<_>>().join(",")
        );
        let got = eval_str(&text, &roster).unwrap();
        let want: Vec<Mask> = sets.iter().copied().filter(|&a| !sets.iter().any(|&b| b != a && subset(a, b))).collect();
        prop_assert_eq!(sorted(masks(&got)), sorted(want));
        let again = eval_str(&format_family(&got, &roster), &roster).unwrap();
        prop_assert!(again.same_members(&got));
    }

    #[test]
    fn threshold_expression_matches_subset_count(n in 1usize..=7, k in 1usize..=7) {
        prop_assume!(k <= n);
        let roster = Roster::numbered(n);
        let names: Vec<String> = (0..n).map(|p| roster.name(p).to_string()).collect();
        let fam = eval_str(&format!("theta({k},{{{}}})", names.join(",")), &roster).unwrap();
        prop_assert_eq!(fam.len(), binomial(n, k));
        prop_assert!(fam.iter().all(|s| s.len() == k));
    }
}
