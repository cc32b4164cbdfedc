//! Exhaustive enumeration straight from the definitions. Exponential in
//! the number of items; meant for checking `mine` on small inputs.

use super::{excluded_items, ClosedItemset, TargetSet};
use crate::corpus::TransactionSet;

/// Every itemset Q ∋ b with a non-empty antecedent, support ≥ ε, no other
/// excluded item, and no single-item extension of equal support.
pub fn closed_itemsets_brute_force(ts: &TransactionSet, targets: &TargetSet) -> Vec<ClosedItemset> {
    let universe = ts.dictionary().len();
    let eps = targets.min_support() as u64;
    let mut out = Vec::new();
    for &b in targets.targets() {
        let excluded = excluded_items(ts.dictionary(), ts.scenario(), targets, b);
        let free: Vec<u32> = (0..universe as u32)
            .filter(|&i| i != b && !excluded[i as usize])
            .collect();
        assert!(free.len() < 24, "brute force over {} items", free.len());
        let support = |items: &[u32]| -> u64 {
            ts.transactions()
                .iter()
                .filter(|t| t.binary_search(&b).is_ok() && items.iter().all(|i| t.binary_search(i).is_ok()))
                .count() as u64
        };
        for mask in 1u32..(1 << free.len()) {
            let items: Vec<u32> = free
                .iter()
                .enumerate()
                .filter(|(k, _)| mask & (1 << k) != 0)
                .map(|(_, &i)| i)
                .collect();
            let s = support(&items);
            if s < eps {
                continue;
            }
            let closed = free.iter().filter(|i| !items.contains(i)).all(|&i| {
                let mut bigger = items.clone();
                bigger.push(i);
                support(&bigger) < s
            });
            if closed {
                let mut full = items;
                full.push(b);
                full.sort_unstable();
                out.push(ClosedItemset { target: b, items: full, support: s });
            }
        }
    }
    out.sort();
    out
}
