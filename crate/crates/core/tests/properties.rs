use std::collections::BTreeSet;

use proptest::prelude::*;
use rulerank_core::clusterlab::{average_linkage, average_linkage_naive, cut_at_threshold, Dendrogram};
use rulerank_core::rankcorr::{
    dcc, kendall_tau, kendall_tau_pairwise, ndcc, ndcc_base, overlap_at_k, spearman, Aggregation,
    Method, RankedList, SimilarityMatrix,
};
use rulerank_core::rules::{Contingency, Measure, ScoredRule, ScoredRuleTable};

fn arb_counts() -> impl Strategy<Value = (u64, u64, u64, u64)> {
    (1u64..5_000)
        .prop_flat_map(|n| (Just(n), 1..=n, 1..=n))
        .prop_flat_map(|(n, a, b)| {
            let lo = (a + b).saturating_sub(n).max(1);
            (Just(n), Just(a), Just(b), lo..=a.min(b))
        })
        .prop_map(|(n, a, b, ab)| (a, b, ab, n))
}


fn arb_perm_pair(max: usize) -> impl Strategy<Value = (Vec<usize>, Vec<usize>)> {
    (2..=max).prop_flat_map(|n| {
        let base: Vec<usize> = (0..n).collect();
        (Just(base.clone()).prop_shuffle(), Just(base).prop_shuffle())
    })
}

fn list(order: Vec<usize>) -> RankedList {
    RankedList::from_order(order).unwrap()
}

fn arb_similarity(max: usize) -> impl Strategy<Value = SimilarityMatrix> {
    (2..=max).prop_flat_map(|n| {
        prop::collection::vec(-1000i32..=1000, n * (n - 1) / 2).prop_map(move |flat| {
            let mut v = vec![vec![1.0; n]; n];
            let mut it = flat.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    let x = it.next().unwrap() as f64 / 1000.0;
                    v[i][j] = x;
                    v[j][i] = x;
                }
            }
            let names = (0..n).map(|i| format!("m{i:02}")).collect();
            SimilarityMatrix::new(Method::Ndcc, Aggregation::Pooled, names, v).unwrap()
        })
    })
}

fn same_tree(a: &Dendrogram, b: &Dendrogram) -> bool {
    match (a, b) {
        (Dendrogram::Leaf { name: x, .. }, Dendrogram::Leaf { name: y, .. }) => x == y,
        (
            Dendrogram::Merge { left: l1, right: r1, similarity: s1 },
            Dendrogram::Merge { left: l2, right: r2, similarity: s2 },
        ) => (s1 - s2).abs() < 1e-12 && same_tree(l1, l2) && same_tree(r1, r2),
        _ => false,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn measures_never_nan((a, b, ab, n) in arb_counts()) {
        let c = Contingency::from_counts(a, b, ab, n).unwrap();
        for m in Measure::ALL {
            prop_assert!(!m.evaluate(&c).is_nan(), "{} at {:?}", m, (a, b, ab, n));
        }
        let cells = c.p_ab + c.p_anb + c.p_nab + c.p_nanb;
        prop_assert!((cells - 1.0).abs() < 1e-12);
        prop_assert!(c.p_anb >= 0.0 && c.p_nab >= 0.0 && c.p_nanb >= 0.0);
    }

    #[test]
    fn scored_csv_round_trip(rows in prop::collection::vec(arb_counts(), 0..20)) {
        let rows: Vec<ScoredRule> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (a, b, ab, n))| {
                ScoredRule::from_counts(vec![format!("p{i}"), "q".into()], format!("t{}", i % 3), a, b, ab, n).unwrap()
            })
            .collect();
        let t = ScoredRuleTable::new(None, rows).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        prop_assert_eq!(ScoredRuleTable::read_csv(buf.as_slice(), "t").unwrap(), t.clone());
        let mut buf = Vec::new();
        t.write_jsonl(&mut buf).unwrap();
        prop_assert_eq!(ScoredRuleTable::read_jsonl(buf.as_slice(), "t").unwrap(), t);
    }

    #[test]
    fn coefficient_ranges_and_identities((x, y) in arb_perm_pair(60)) {
        let (a, b) = (list(x), list(y));
        for v in [spearman(&a, &b).unwrap(), kendall_tau(&a, &b).unwrap(), ndcc(&a, &b).unwrap()] {
            prop_assert!((-1.0 - 1e-9..=1.0 + 1e-9).contains(&v));
        }
        for k in 1..=a.len() {
            let o = overlap_at_k(&a, &b, k).unwrap();
            prop_assert!((0.0..=1.0).contains(&o));
        }
        prop_assert_eq!(overlap_at_k(&a, &b, a.len()).unwrap(), 1.0);
        prop_assert_eq!(spearman(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(kendall_tau(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(ndcc(&a, &a).unwrap(), 1.0);
        prop_assert!((ndcc(&a.reversed(), &a).unwrap() + 1.0).abs() < 1e-9);
    }

    #[test]
    fn symmetric_coefficients((x, y) in arb_perm_pair(60)) {
        let (a, b) = (list(x), list(y));
        prop_assert!((dcc(&a, &b).unwrap() - dcc(&b, &a).unwrap()).abs() < 1e-9);
        prop_assert!((ndcc(&a, &b).unwrap() - ndcc(&b, &a).unwrap()).abs() < 1e-9);
        prop_assert_eq!(spearman(&a, &b).unwrap(), spearman(&b, &a).unwrap());
        prop_assert_eq!(kendall_tau(&a, &b).unwrap(), kendall_tau(&b, &a).unwrap());
        prop_assert_eq!(overlap_at_k(&a, &b, 2).unwrap(), overlap_at_k(&b, &a, 2).unwrap());
    }

    #[test]
    fn kendall_fast_path_matches_pairs((x, y) in arb_perm_pair(200)) {
        let (a, b) = (list(x), list(y));
        prop_assert_eq!(kendall_tau(&a, &b).unwrap(), kendall_tau_pairwise(&a, &b).unwrap());
    }

    #[test]
    fn ndcc_log_base_invariant((x, y) in arb_perm_pair(200), base in 1.5f64..20.0) {
        let (a, b) = (list(x), list(y));
        prop_assert!((ndcc(&a, &b).unwrap() - ndcc_base(&a, &b, base).unwrap()).abs() < 1e-9);
    }

    #[test]
    fn top_swap_costs_more(n in 4usize..400) {
        let base = list((0..n).collect());
        let mut top: Vec<usize> = (0..n).collect();
        top.swap(0, 1);
        let mut bottom: Vec<usize> = (0..n).collect();
        bottom.swap(n - 2, n - 1);
        prop_assert!(ndcc(&list(top), &base).unwrap() < ndcc(&list(bottom), &base).unwrap());
    }

    #[test]
    fn coefficients_invariant_under_increasing_transforms(
        scores in prop::collection::vec(-1e6f64..1e6, 2..50),
        other in prop::collection::vec(-1e6f64..1e6, 2..50),
    ) {
        let n = scores.len().min(other.len());
        let (s, o) = (&scores[..n], &other[..n]);
        let a = RankedList::from_scores(s);
        let b = RankedList::from_scores(o);
        // Affine map with a positive power-of-two slope keeps every comparison.
        let moved: Vec<f64> = s.iter().map(|v| v * 4.0 + 8.0).collect();
        let a2 = RankedList::from_scores(&moved);
        prop_assert_eq!(&a, &a2);
        prop_assert_eq!(ndcc(&a, &b).unwrap(), ndcc(&a2, &b).unwrap());
        prop_assert_eq!(kendall_tau(&a, &b).unwrap(), kendall_tau(&a2, &b).unwrap());
    }

    #[test]
    fn linkage_matches_naive(s in arb_similarity(10)) {
        let fast = average_linkage(&s).unwrap();
        let slow = average_linkage_naive(&s).unwrap();
        prop_assert!(same_tree(&fast, &slow), "{:?}\n{:?}", fast.to_json(), slow.to_json());
    }

    #[test]
    fn merges_never_increase_rootward(s in arb_similarity(12)) {
        fn check(d: &Dendrogram) -> bool {
            match d {
                Dendrogram::Leaf { .. } => true,
                Dendrogram::Merge { left, right, similarity } => {
                    [left, right].iter().all(|c| match c.as_ref() {
                        Dendrogram::Merge { similarity: inner, .. } => *inner >= *similarity - 1e-12,
                        _ => true,
                    }) && check(left) && check(right)
                }
            }
        }
        prop_assert!(check(&average_linkage(&s).unwrap()));
    }

    #[test]
    fn cuts_partition_leaves(s in arb_similarity(12), theta in -1.0f64..=1.0) {
        let d = average_linkage(&s).unwrap();
        let groups = cut_at_threshold(&d, theta);
        let mut seen = BTreeSet::new();
        let mut total = 0;
        for g in &groups {
            prop_assert!(!g.members.is_empty());
            total += g.members.len();
            seen.extend(g.members.iter().cloned());
        }
        prop_assert_eq!(total, s.len());
        prop_assert_eq!(seen, s.measures.iter().cloned().collect::<BTreeSet<_>>());
    }
}
