//! Targeted closed-itemset enumeration (LCM run once per target item) and
//! the second pass that counts rule antecedents over the whole dataset.

pub mod reference;
mod trie;

use std::collections::{BTreeMap, BTreeSet};
use std::io::{self, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{ItemDictionary, ItemKind, Scenario, TransactionSet};
use crate::error::{Error, Result};

pub use trie::{count_antecedent_supports, AntecedentSupports, AntecedentTrie};

/// The items every mined itemset must contain, with one support threshold.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetSet {
    targets: Vec<u32>,
    min_support: u32,
}

impl TargetSet {
    pub fn new(targets: impl IntoIterator<Item = u32>, min_support: u32) -> Result<Self> {
        let targets: BTreeSet<u32> = targets.into_iter().collect();
        if targets.is_empty() {
            return Err(Error::Argument("at least one target is required".into()));
        }
        if min_support == 0 {
            return Err(Error::Argument("minimum support must be at least 1".into()));
        }
        Ok(TargetSet {
            targets: targets.into_iter().collect(),
            min_support,
        })
    }

    pub fn targets(&self) -> &[u32] {
        &self.targets
    }

    pub fn min_support(&self) -> u32 {
        self.min_support
    }

    pub fn contains(&self, item: u32) -> bool {
        self.targets.binary_search(&item).is_ok()
    }
}

/// A closed itemset found while enumerating under `target`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClosedItemset {
    pub target: u32,
    pub items: Vec<u32>,
    pub support: u64,
}

impl ClosedItemset {
    /// The itemset without its target, i.e. the rule antecedent.
    pub fn antecedent(&self) -> Vec<u32> {
        self.items
            .iter()
            .copied()
            .filter(|&i| i != self.target)
            .collect()
    }
}

/// T_b = {E ∈ T | b ∈ E} for every target b. A transaction holding k
/// targets lands in k partitions; absent targets get an empty partition.
pub fn partition_by_target<'a>(
    ts: &'a TransactionSet,
    targets: &TargetSet,
) -> BTreeMap<u32, Vec<&'a [u32]>> {
    let mut parts: BTreeMap<u32, Vec<&[u32]>> =
        targets.targets().iter().map(|&b| (b, Vec::new())).collect();
    for t in ts.transactions() {
        for (&b, part) in parts.iter_mut() {
            if t.binary_search(&b).is_ok() {
                part.push(t);
            }
        }
    }
    parts
}

/// clo(P): the intersection of the transactions supporting P.
///
/// `supporting` must be exactly the transactions containing P and must
/// not be empty.
pub fn closure(supporting: &[&[u32]]) -> Vec<u32> {
    let (first, rest) = supporting
        .split_first()
        .expect("closure of an itemset with no supporting transactions");
    let mut acc = first.to_vec();
    for t in rest {
        acc.retain(|i| t.binary_search(i).is_ok());
        if acc.is_empty() {
            break;
        }
    }
    acc
}

/// Items dropped from target `b`'s partition before enumeration: every
/// other target and, in DEMO, every other category.
fn excluded_items(dict: &ItemDictionary, scenario: Scenario, targets: &TargetSet, b: u32) -> Vec<bool> {
    (0..dict.len() as u32)
        .map(|i| {
            i != b
                && (targets.contains(i)
                    || (scenario == Scenario::Demo && dict.kind(i) == Some(ItemKind::Category)))
        })
        .collect()
}

struct Enumerator {
    target: u32,
    min_support: u64,
    /// counts[depth] is a scratch frequency table sized to the item universe.
    counts: Vec<Vec<u64>>,
    out: Vec<ClosedItemset>,
}

impl Enumerator {
    fn buffer(&mut self, depth: usize, universe: usize) -> Vec<u64> {
        if self.counts.len() <= depth {
            self.counts.resize_with(depth + 1, || vec![0; universe]);
        }
        std::mem::take(&mut self.counts[depth])
    }

    /// One LCM call. `base` is the parent closed itemset (target excluded),
    /// `ext` the extension item (`None` at the root, where the target plays
    /// the role of the largest item), `occ` the transactions containing
    /// base ∪ {ext}.
    fn expand(&mut self, base: &[u32], ext: Option<u32>, occ: &[&[u32]], depth: usize, universe: usize) {
        let support = occ.len() as u64;
        let mut counts = self.buffer(depth, universe);
        let mut touched: Vec<u32> = Vec::new();
        for t in occ {
            for &i in t.iter() {
                let c = &mut counts[i as usize];
                if *c == 0 {
                    touched.push(i);
                }
                *c += 1;
            }
        }
        touched.sort_unstable();

        // Closure, then the unicity (first-parent) test: nothing outside
        // base may join above the extension item.
        let closed: Vec<u32> = touched
            .iter()
            .copied()
            .filter(|&i| counts[i as usize] == support)
            .collect();
        let unique = match ext {
            None => true,
            Some(e) => closed
                .iter()
                .all(|&i| i <= e || base.binary_search(&i).is_ok()),
        };
        if unique {
            if !closed.is_empty() {
                let mut items = closed.clone();
                let pos = items.binary_search(&self.target).unwrap_err();
                items.insert(pos, self.target);
                self.out.push(ClosedItemset {
                    target: self.target,
                    items,
                    support,
                });
            }
            let candidates: Vec<u32> = touched
                .iter()
                .copied()
                .filter(|&i| {
                    let c = counts[i as usize];
                    c >= self.min_support && c < support && ext.is_none_or(|e| i < e)
                })
                .collect();
            for &i in &touched {
                counts[i as usize] = 0;
            }
            self.counts[depth] = counts;
            for i in candidates.into_iter().rev() {
                let sub: Vec<&[u32]> = occ
                    .iter()
                    .copied()
                    .filter(|t| t.binary_search(&i).is_ok())
                    .collect();
                self.expand(&closed, Some(i), &sub, depth + 1, universe);
            }
        } else {
            for &i in &touched {
                counts[i as usize] = 0;
            }
            self.counts[depth] = counts;
        }
    }
}

/// Enumerate all closed itemsets of size ≥ 2 containing `target` in its
/// (already restricted) partition, each exactly once.
fn mine_target(target: u32, partition: &[Vec<u32>], min_support: u64, universe: usize) -> Vec<ClosedItemset> {
    if (partition.len() as u64) < min_support || partition.is_empty() {
        return Vec::new();
    }
    let occ: Vec<&[u32]> = partition.iter().map(Vec::as_slice).collect();
    let mut e = Enumerator {
        target,
        min_support,
        counts: Vec::new(),
        out: Vec::new(),
    };
    e.expand(&[], None, &occ, 0, universe);
    e.out
}

/// Result of the mining pass.
#[derive(Debug, Clone)]
pub struct MiningOutput {
    /// Sorted by (target, items).
    pub itemsets: Vec<ClosedItemset>,
    /// Every antecedent Q \ {target}, to be counted over the full dataset.
    pub antecedents: AntecedentTrie,
    /// |T_b| for each target.
    pub target_supports: BTreeMap<u32, u64>,
}

/// Mine every closed frequent itemset containing a target. Targets are
/// enumerated independently and in parallel on the current rayon pool.
pub fn mine(ts: &TransactionSet, targets: &TargetSet) -> MiningOutput {
    let universe = ts.dictionary().len();
    let parts = partition_by_target(ts, targets);
    let target_supports = parts.iter().map(|(&b, p)| (b, p.len() as u64)).collect();
    let jobs: Vec<(u32, Vec<&[u32]>)> = parts.into_iter().collect();
    let per_target: Vec<Vec<ClosedItemset>> = jobs
        .par_iter()
        .map(|(b, part)| {
            let excluded = excluded_items(ts.dictionary(), ts.scenario(), targets, *b);
            // The target itself is implicit in every transaction of T_b.
            let restricted: Vec<Vec<u32>> = part
                .iter()
                .map(|t| {
                    t.iter()
                        .copied()
                        .filter(|&i| i != *b && !excluded[i as usize])
                        .collect()
                })
                .collect();
            let mut found = mine_target(*b, &restricted, targets.min_support() as u64, universe);
            found.sort();
            found
        })
        .collect();

    let itemsets: Vec<ClosedItemset> = per_target.into_iter().flatten().collect();
    let mut antecedents = AntecedentTrie::new();
    for q in &itemsets {
        antecedents.insert(&q.antecedent());
    }
    MiningOutput {
        itemsets,
        antecedents,
        target_supports,
    }
}

/// `target<TAB>support<TAB>space-separated items` per itemset.
pub fn write_itemsets<W: Write>(mut out: W, itemsets: &[ClosedItemset]) -> io::Result<()> {
    for q in itemsets {
        let items: Vec<String> = q.items.iter().map(u32::to_string).collect();
        writeln!(out, "{}\t{}\t{}", q.target, q.support, items.join(" "))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Four-transaction example corpus, items interned as a, b, c, x, y.
    pub(crate) fn example() -> TransactionSet {
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

    fn id(ts: &TransactionSet, l: &str) -> u32 {
        ts.dictionary().id(l).unwrap()
    }

    fn render(ts: &TransactionSet, q: &ClosedItemset) -> String {
        let mut labels: Vec<&str> = q
            .items
            .iter()
            .map(|&i| ts.dictionary().label(i).unwrap())
            .collect();
        labels.sort();
        format!("{}:{}", labels.concat(), q.support)
    }

    #[test]
    fn partition_sizes() {
        let ts = example();
        let targets = TargetSet::new([id(&ts, "x"), id(&ts, "y")], 2).unwrap();
        let parts = partition_by_target(&ts, &targets);
        assert_eq!(parts[&id(&ts, "x")].len(), 3);
        assert_eq!(parts[&id(&ts, "y")].len(), 4);
    }

    #[test]
    fn partition_absent_target_is_empty() {
        let mut ts = example();
        let mut dict = ts.dictionary().clone();
        let z = dict.intern("z");
        ts = TransactionSet::new(Scenario::ProductReceipt, ts.transactions().to_vec(), dict).unwrap();
        let parts = partition_by_target(&ts, &TargetSet::new([z], 1).unwrap());
        assert!(parts[&z].is_empty());
        assert!(mine(&ts, &TargetSet::new([z], 1).unwrap()).itemsets.is_empty());
    }

    #[test]
    fn partition_duplicates_multi_target_transactions() {
        let ts = TransactionSet::from_labels(Scenario::ProductReceipt, [vec!["x", "y"]]).unwrap();
        let targets = TargetSet::new([0, 1], 1).unwrap();
        let parts = partition_by_target(&ts, &targets);
        assert_eq!(parts[&0].len(), 1);
        assert_eq!(parts[&1].len(), 1);
    }

    #[test]
    fn closure_examples() {
        let t1 = [0u32, 1, 2];
        let t2 = [0u32, 1];
        let t3 = [0u32, 2];
        // transactions containing b (=1)
        assert_eq!(closure(&[&t1, &t2]), vec![0, 1]);
        // transactions containing {a, b}
        assert_eq!(closure(&[&t1, &t2]), vec![0, 1]);
        assert_eq!(closure(&[&t3]), vec![0, 2]);
        // idempotent: re-closing over the same support gives the same set
        let c = closure(&[&t1, &t3]);
        assert_eq!(c, vec![0, 2]);
    }

    #[test]
    fn example_yields_nine_itemsets() {
        let ts = example();
        let targets = TargetSet::new([id(&ts, "x"), id(&ts, "y")], 2).unwrap();
        let out = mine(&ts, &targets);
        let mut got: Vec<String> = out.itemsets.iter().map(|q| render(&ts, q)).collect();
        got.sort();
        let mut want = vec![
            "bx:3", "abx:2", "bcx:2", "ay:3", "by:3", "aby:2", "cy:3", "bcy:2", "acy:2",
        ];
        want.sort();
        assert_eq!(got, want);
        assert_eq!(out.antecedents.len(), 6); // b, ab, bc, a, c, ac
    }

    #[test]
    fn unreachable_threshold() {
        let ts = example();
        let targets = TargetSet::new([id(&ts, "x"), id(&ts, "y")], 5).unwrap();
        assert!(mine(&ts, &targets).itemsets.is_empty());
    }

    #[test]
    fn duplicated_pair() {
        let ts = TransactionSet::from_labels(Scenario::ProductReceipt, vec![vec!["a", "b"]; 5]).unwrap();
        let out = mine(&ts, &TargetSet::new([id(&ts, "b")], 2).unwrap());
        assert_eq!(out.itemsets.len(), 1);
        assert_eq!(render(&ts, &out.itemsets[0]), "ab:5");
    }

    #[test]
    fn antecedent_supports_over_full_data() {
        let ts = example();
        let targets = TargetSet::new([id(&ts, "x"), id(&ts, "y")], 2).unwrap();
        let out = mine(&ts, &targets);
        let sup = count_antecedent_supports(&ts, out.antecedents);
        assert_eq!(sup.get(&[id(&ts, "b")]), Some(3));
        assert_eq!(sup.get(&[id(&ts, "a"), id(&ts, "b")]), Some(2));
        assert_eq!(sup.get(&[id(&ts, "a"), id(&ts, "c")]), Some(2));
        assert_eq!(sup.get(&[id(&ts, "x")]), None);
    }

    #[test]
    fn demo_drops_other_categories() {
        let ts = TransactionSet::from_labels(
            Scenario::Demo,
            vec![vec!["age=<35", "cat=A", "cat=B"]; 3],
        )
        .unwrap();
        let a = id(&ts, "cat=A");
        let out = mine(&ts, &TargetSet::new([a], 1).unwrap());
        assert_eq!(out.itemsets.len(), 1);
        assert_eq!(render(&ts, &out.itemsets[0]), "age=<35cat=A:3");
    }

    #[test]
    fn target_set_validation() {
        assert!(TargetSet::new([], 1).is_err());
        assert!(TargetSet::new([1], 0).is_err());
        assert_eq!(TargetSet::new([3, 1, 3], 2).unwrap().targets(), &[1, 3]);
    }

    #[test]
    fn itemset_dump_format() {
        let q = ClosedItemset {
            target: 4,
            items: vec![0, 1, 4],
            support: 2,
        };
        let mut buf = Vec::new();
        write_itemsets(&mut buf, &[q]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "4\t2\t0 1 4\n");
    }
}
