//! Acceptance suite: one PASS/FAIL line per criterion.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use rulerank_cli::{
    compare, mine_score, prepare, synth, with_workers, CompareArgs, MineScoreArgs, PrepareArgs,
    SynthArgs,
};
use rulerank_core::clusterlab::{average_linkage, average_linkage_naive, cut_at_threshold, group_report, Dendrogram};
use rulerank_core::corpus::{Scenario, TransactionSet};
use rulerank_core::miner::reference::closed_itemsets_brute_force;
use rulerank_core::miner::{mine, TargetSet};
use rulerank_core::pipeline::mine_and_score;
use rulerank_core::rankcorr::{
    correlation_matrix, kendall_tau, kendall_tau_pairwise, ndcc, ndcc_base, overlap_at_k, spearman,
    Aggregation, Method, RankedList, SimilarityMatrix,
};
use rulerank_core::rules::{Equivalence, Measure, ScoredRule};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn list(order: &[usize]) -> RankedList {
    RankedList::from_order(order.to_vec()).unwrap()
}

fn random_perm(rng: &mut ChaCha8Rng, n: usize) -> RankedList {
    let mut v: Vec<usize> = (0..n).collect();
    v.shuffle(rng);
    list(&v)
}

fn c1_worked_example() -> Outcome {
    let start = Instant::now();
    let l1 = list(&[0, 1, 2, 3]);
    let others = [list(&[1, 0, 2, 3]), list(&[0, 1, 3, 2]), list(&[1, 2, 0, 3])];
    let expect = [
        (0.80, 2.0 / 3.0, 1.0, 0.20),
        (0.80, 2.0 / 3.0, 1.0, 0.97),
        (0.40, 1.0 / 3.0, 0.5, -0.18),
    ];
    let mut bad = Vec::new();
    for (k, (l, &(sp, kt, ov, nd))) in others.iter().zip(&expect).enumerate() {
        let got = (
            spearman(&l1, l).unwrap(),
            kendall_tau(&l1, l).unwrap(),
            overlap_at_k(&l1, l, 2).unwrap(),
            ndcc(&l1, l).unwrap(),
        );
        let ok = (got.0 - sp).abs() < 1e-12
            && (got.1 - kt).abs() < 1e-12
            && (got.2 - ov).abs() < 1e-12
            && (got.3 - nd).abs() <= 0.005;
        if !ok {
            bad.push(format!("L{}: {got:?}", k + 2));
        }
    }
    let t = start.elapsed();
    let pass = bad.is_empty() && t < Duration::from_secs(1);
    outcome(pass, format!("{:?}{}", t, if bad.is_empty() { String::new() } else { format!(" mismatches {bad:?}") }))
}

fn example_corpus() -> TransactionSet {
    TransactionSet::from_labels(
        Scenario::ProductReceipt,
        [
            vec!["a", "b", "c", "x", "y"],
            vec!["a", "c", "y"],
            vec!["a", "b", "x", "y"],
            vec!["b", "c", "x", "y"],
        ],
    )
    .unwrap()
}

fn labelled(ts: &TransactionSet, items: &[u32]) -> BTreeSet<String> {
    items.iter().map(|&i| ts.dictionary().label(i).unwrap().to_string()).collect()
}

fn c2_miner_oracle() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cases = 300;
    let mut mismatches = 0;
    for _ in 0..cases {
        let items = rng.random_range(2..=12usize);
        let rows: Vec<Vec<String>> = (0..rng.random_range(1..=64))
            .map(|_| {
                let mut row: Vec<String> =
                    (0..items).filter(|_| rng.random_bool(0.4)).map(|k| format!("i{k}")).collect();
                if row.is_empty() {
                    row.push(format!("i{}", rng.random_range(0..items)));
                }
                row
            })
            .collect();
        let ts = TransactionSet::from_labels(Scenario::ProductReceipt, rows).unwrap();
        let n_items = ts.dictionary().len() as u32;
        let n_targets = rng.random_range(1..=3.min(n_items));
        let targets: BTreeSet<u32> = (0..n_targets).map(|_| rng.random_range(0..n_items)).collect();
        let ts_targets = TargetSet::new(targets, rng.random_range(1..=6)).unwrap();
        let mut got = mine(&ts, &ts_targets).itemsets;
        let mut want = closed_itemsets_brute_force(&ts, &ts_targets);
        got.sort_by(|a, b| (a.target, &a.items).cmp(&(b.target, &b.items)));
        want.sort_by(|a, b| (a.target, &a.items).cmp(&(b.target, &b.items)));
        if got != want {
            mismatches += 1;
        }
    }

    let ts = example_corpus();
    let id = |l| ts.dictionary().id(l).unwrap();
    let out = mine(&ts, &TargetSet::new([id("x"), id("y")], 2).unwrap());
    let got: BTreeSet<(BTreeSet<String>, u64)> =
        out.itemsets.iter().map(|q| (labelled(&ts, &q.items), q.support)).collect();
    let oracle: BTreeSet<(BTreeSet<String>, u64)> = [
        ("b x", 3),
        ("a b x", 2),
        ("b c x", 2),
        ("a y", 3),
        ("b y", 3),
        ("c y", 3),
        ("a b y", 2),
        ("a c y", 2),
        ("b c y", 2),
    ]
    .iter()
    .map(|(s, n)| (s.split(' ').map(str::to_string).collect(), *n))
    .collect();
    let t = start.elapsed();
    let example_ok = got == oracle;
    outcome(
        mismatches == 0 && example_ok && t < Duration::from_secs(30),
        format!("{cases} corpora, {mismatches} mismatches, example oracle {}, {t:?}", if example_ok { "ok" } else { "differs" }),
    )
}

/// Random single-consequent table; every support is at least 1000.
fn random_single_target_rules(rng: &mut ChaCha8Rng) -> Vec<ScoredRule> {
    let n = rng.random_range(20_000..=1_000_000u64);
    let b = rng.random_range(1_000..=n / 2);
    (0..rng.random_range(10..=60))
        .map(|i| {
            let ab = rng.random_range(1_000..=b);
            let a = rng.random_range(ab..=n - b + ab);
            ScoredRule::from_counts(vec![format!("p{i}")], "t".into(), a, b, ab, n).unwrap()
        })
        .collect()
}

fn c3_equivalence_classes() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tables = 1000;
    let mut violations: Vec<(Equivalence, usize)> = Equivalence::ALL.iter().map(|&e| (e, 0)).collect();
    for _ in 0..tables {
        let rules = random_single_target_rules(&mut rng);
        let order = |m: Measure| {
            let scores: Vec<f64> = rules.iter().map(|r| r.score(m)).collect();
            RankedList::from_scores(&scores).order().to_vec()
        };
        for (e, count) in violations.iter_mut() {
            let members = e.members();
            let first = order(members[0]);
            if members[1..].iter().any(|&m| order(m) != first) {
                *count += 1;
            }
        }
    }
    let total: usize = violations.iter().map(|v| v.1).sum();
    let detail = violations
        .iter()
        .map(|(e, c)| format!("{} {c}", e.symbol()))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(total == 0, format!("{tables} tables; tables with a differing ranking: {detail}"))
}

fn c4_ndcc_properties() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = Vec::new();
    let mut sizes: Vec<usize> = (2..=64).collect();
    sizes.extend((0..40).map(|_| rng.random_range(65..=10_000)));
    sizes.push(10_000);
    for &n in &sizes {
        let l = random_perm(&mut rng, n);
        let same = ndcc(&l, &l).unwrap();
        let rev = ndcc(&l.reversed(), &l).unwrap();
        if (same - 1.0).abs() > 1e-9 || (rev + 1.0).abs() > 1e-9 {
            failures.push(format!("identity/reversal n={n}: {same} {rev}"));
        }
        let other = random_perm(&mut rng, n);
        let (e, two) = (ndcc(&l, &other).unwrap(), ndcc_base(&l, &other, 2.0).unwrap());
        if (e - two).abs() > 1e-9 {
            failures.push(format!("log base n={n}: {e} vs {two}"));
        }
    }
    for n in 4..=1000 {
        let base: Vec<usize> = (0..n).collect();
        let mut top = base.clone();
        top.swap(0, 1);
        let mut bottom = base.clone();
        bottom.swap(n - 2, n - 1);
        let b = list(&base);
        if ndcc(&b, &list(&top)).unwrap() >= ndcc(&b, &list(&bottom)).unwrap() {
            failures.push(format!("top swap n={n}"));
        }
    }
    outcome(failures.is_empty(), format!("{} sizes, top swap n=4..1000, {} failures {:?}", sizes.len(), failures.len(), failures.iter().take(3).collect::<Vec<_>>()))
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, rest: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if rest.is_empty() {
            out.push(prefix.clone());
        }
        for i in 0..rest.len() {
            let x = rest.remove(i);
            prefix.push(x);
            go(prefix, rest, out);
            prefix.pop();
            rest.insert(i, x);
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut (0..n).collect(), &mut out);
    out
}

fn c5_kendall_fast_path() -> Outcome {
    let mut checked = 0;
    let mut mismatches = 0;
    for n in 2..=6 {
        let perms = permutations(n);
        for a in &perms {
            for b in &perms {
                let (a, b) = (list(a), list(b));
                checked += 1;
                if kendall_tau(&a, &b).unwrap().to_bits() != kendall_tau_pairwise(&a, &b).unwrap().to_bits() {
                    mismatches += 1;
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let (a, b) = (random_perm(&mut rng, 500), random_perm(&mut rng, 500));
        checked += 1;
        if kendall_tau(&a, &b).unwrap().to_bits() != kendall_tau_pairwise(&a, &b).unwrap().to_bits() {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{checked} pairs, {mismatches} mismatches"))
}

fn random_similarity(rng: &mut ChaCha8Rng, n: usize) -> SimilarityMatrix {
    let mut v = vec![vec![1.0; n]; n];
    for i in 0..n {
        for j in i + 1..n {
            // Coarse values so that tied averages actually occur.
            let x = rng.random_range(-4..=4) as f64 / 4.0;
            v[i][j] = x;
            v[j][i] = x;
        }
    }
    let names = (0..n).map(|i| format!("m{i:02}")).collect();
    SimilarityMatrix::new(Method::Ndcc, Aggregation::Pooled, names, v).unwrap()
}

/// Every leaf set of a subtree whose merges all sit at or above theta,
/// taken maximally, straight from the tree.
fn reference_cut(d: &Dendrogram, theta: f64) -> BTreeSet<BTreeSet<String>> {
    fn all_at_least(d: &Dendrogram, theta: f64) -> bool {
        match d {
            Dendrogram::Leaf { .. } => true,
            Dendrogram::Merge { left, right, similarity } => {
                *similarity >= theta && all_at_least(left, theta) && all_at_least(right, theta)
            }
        }
    }
    fn go(d: &Dendrogram, theta: f64, out: &mut BTreeSet<BTreeSet<String>>) {
        if all_at_least(d, theta) {
            out.insert(d.leaves().into_iter().map(str::to_string).collect());
        } else if let Dendrogram::Merge { left, right, .. } = d {
            go(left, theta, out);
            go(right, theta, out);
        }
    }
    let mut out = BTreeSet::new();
    go(d, theta, &mut out);
    out
}

fn c6_clustering() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut linkage_mismatch = 0;
    let mut cut_mismatch = 0;
    for _ in 0..100 {
        let n = rng.random_range(1..=10);
        let s = random_similarity(&mut rng, n);
        let fast = average_linkage(&s).unwrap();
        let slow = average_linkage_naive(&s).unwrap();
        let same_shape = fast.to_json() == slow.to_json();
        if !same_shape {
            linkage_mismatch += 1;
        }
        for theta in [-1.0, -0.25, 0.0, 0.5, 0.9, 1.0] {
            let got: BTreeSet<BTreeSet<String>> = cut_at_threshold(&fast, theta)
                .into_iter()
                .map(|g| g.members.into_iter().collect())
                .collect();
            let covered: usize = got.iter().map(BTreeSet::len).sum();
            if got != reference_cut(&fast, theta) || covered != n {
                cut_mismatch += 1;
            }
        }
    }

    let ts = example_corpus();
    let id = |l| ts.dictionary().id(l).unwrap();
    let table = mine_and_score(&ts, &TargetSet::new([id("x"), id("y")], 2).unwrap()).unwrap();
    let s = correlation_matrix(&table, Method::Ndcc, Aggregation::PerTarget).unwrap();
    let mut profile_ok = true;
    let mut notes = Vec::new();
    for k in [1, 2, 20] {
        let (_, groups) = group_report(&s, &table, 0.9, k).unwrap();
        let holder = |name: &str| groups.iter().find(|g| g.members.iter().any(|m| m == name)).unwrap();
        let max_conf = groups.iter().filter_map(|g| g.mean_top_confidence).fold(f64::MIN, f64::max);
        let max_rec = groups.iter().filter_map(|g| g.mean_top_recall).fold(f64::MIN, f64::max);
        let conf = holder("Confidence").mean_top_confidence.unwrap();
        let rec = holder("Recall").mean_top_recall.unwrap();
        if conf < max_conf - 1e-12 || rec < max_rec - 1e-12 {
            profile_ok = false;
        }
        notes.push(format!("k={k}: {} groups, conf {conf:?}/{max_conf:?}, recall {rec:?}/{max_rec:?}", groups.len()));
    }
    outcome(
        linkage_mismatch == 0 && cut_mismatch == 0 && profile_ok,
        format!("linkage mismatches {linkage_mismatch}, cut mismatches {cut_mismatch}; {}", notes.join("; ")),
    )
}

fn pipeline_run(dir: &Path, raw: &Path, workers: usize) -> Duration {
    let start = Instant::now();
    with_workers(workers, || {
        prepare(&PrepareArgs {
            sales: raw.join("sales.csv"),
            customers: None,
            taxonomy: None,
            scenario: Scenario::ProductReceipt,
            out: dir.join("prepared"),
        })
        .unwrap();
        mine_score(&MineScoreArgs {
            transactions: dir.join("prepared/transactions.txt"),
            dictionary: None,
            scenario: None,
            epsilon: Some(100),
            targets: Vec::new(),
            top_targets: Some(20),
            out: dir.join("scored"),
        })
        .unwrap();
        compare(&CompareArgs {
            scored: dir.join("scored/scored.csv"),
            method: vec![Method::Ndcc, Method::Kendall, Method::Spearman, Method::Overlap { k: 20 }],
            aggregation: Aggregation::PerTarget,
            k: None,
            theta: 0.9,
            out: dir.join("compare"),
        })
        .unwrap();
    });
    start.elapsed()
}

fn tree_files(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for sub in ["prepared", "scored", "compare"] {
        let mut names: Vec<_> = fs::read_dir(root.join(sub)).unwrap().map(|e| e.unwrap().path()).collect();
        names.sort();
        for p in names {
            out.push((format!("{sub}/{}", p.file_name().unwrap().to_string_lossy()), fs::read(&p).unwrap()));
        }
    }
    out
}

fn c7_desk_scale() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let raw = tmp.path().join("raw");
    let start = Instant::now();
    synth(&SynthArgs {
        seed: 7,
        customers: 5_000,
        products: 2_000,
        receipts: 100_000,
        skew: 1.1,
        out: raw.clone(),
    })
    .unwrap();
    let synth_time = start.elapsed();
    let mut times = Vec::new();
    let mut trees = Vec::new();
    for workers in [1, 2, 8] {
        let dir = tmp.path().join(format!("w{workers}"));
        times.push(pipeline_run(&dir, &raw, workers));
        trees.push(tree_files(&dir));
    }
    let identical = trees.windows(2).all(|w| w[0] == w[1]);
    let rules = fs::read_to_string(tmp.path().join("w1/scored/scored.csv")).unwrap().lines().count() - 1;
    let slowest = *times.iter().max().unwrap();
    outcome(
        identical && rules > 0 && synth_time + slowest < Duration::from_secs(120),
        format!(
            "{rules} rules, {} files, synth {synth_time:.1?}, pipeline 1/2/8 workers {:.1?}/{:.1?}/{:.1?}, byte-identical {identical}",
            trees[0].len(), times[0], times[1], times[2]
        ),
    )
}

#[test]
fn acceptance() {
    type Check = fn() -> Outcome;
    let criteria: [(&str, Check); 7] = [
        ("1 worked ranking example", c1_worked_example),
        ("2 miner oracle equivalence", c2_miner_oracle),
        ("3 measure equivalence classes", c3_equivalence_classes),
        ("4 NDCC properties", c4_ndcc_properties),
        ("5 Kendall fast path", c5_kendall_fast_path),
        ("6 clustering sanity", c6_clustering),
        ("7 desk-scale pipeline", c7_desk_scale),
    ];
    let mut failed = Vec::new();
    for (name, run) in criteria {
        let o = run();
        println!("[{}] criterion {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(name);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
