use rayon::prelude::*;

use crate::corpus::TransactionSet;

const SCAN_CHUNK: usize = 4096;

#[derive(Debug, Clone, Default)]
struct Node {
    /// (item, child node) sorted by item.
    children: Vec<(u32, u32)>,
    terminal: Option<u32>,
}

/// Prefix tree over sorted item sequences; one terminal per distinct
/// antecedent.
#[derive(Debug, Clone)]
pub struct AntecedentTrie {
    nodes: Vec<Node>,
    terminals: usize,
}

impl Default for AntecedentTrie {
    fn default() -> Self {
        AntecedentTrie {
            nodes: vec![Node::default()],
            terminals: 0,
        }
    }
}

impl AntecedentTrie {
    pub fn new() -> Self {
        Self::default()
    }

    fn child(&self, node: u32, item: u32) -> Option<u32> {
        let children = &self.nodes[node as usize].children;
        children
            .binary_search_by_key(&item, |&(i, _)| i)
            .ok()
            .map(|pos| children[pos].1)
    }

    /// Insert a sorted, non-empty itemset; returns its terminal index.
    pub fn insert(&mut self, items: &[u32]) -> u32 {
        debug_assert!(items.windows(2).all(|w| w[0] < w[1]));
        let mut node = 0u32;
        for &item in items {
            let next = self.nodes.len() as u32;
            let children = &mut self.nodes[node as usize].children;
            node = match children.binary_search_by_key(&item, |&(i, _)| i) {
                Ok(pos) => children[pos].1,
                Err(pos) => {
                    children.insert(pos, (item, next));
                    self.nodes.push(Node::default());
                    next
                }
            };
        }
        let terminals = &mut self.terminals;
        *self.nodes[node as usize].terminal.get_or_insert_with(|| {
            *terminals += 1;
            (*terminals - 1) as u32
        })
    }

    pub fn terminal(&self, items: &[u32]) -> Option<u32> {
        let mut node = 0u32;
        for &item in items {
            node = self.child(node, item)?;
        }
        self.nodes[node as usize].terminal
    }

    /// Number of distinct antecedents stored.
    pub fn len(&self) -> usize {
        self.terminals
    }

    pub fn is_empty(&self) -> bool {
        self.terminals == 0
    }

    fn walk(&self, node: u32, rest: &[u32], counts: &mut [u64]) {
        for (pos, &item) in rest.iter().enumerate() {
            if let Some(child) = self.child(node, item) {
                if let Some(t) = self.nodes[child as usize].terminal {
                    counts[t as usize] += 1;
                }
                self.walk(child, &rest[pos + 1..], counts);
            }
        }
    }

    /// Add one to the counter of every stored antecedent contained in
    /// `transaction` (sorted ascending).
    pub fn count_into(&self, transaction: &[u32], counts: &mut [u64]) {
        self.walk(0, transaction, counts);
    }
}

/// Antecedent supports over the full transaction set.
#[derive(Debug, Clone)]
pub struct AntecedentSupports {
    trie: AntecedentTrie,
    counts: Vec<u64>,
}

impl AntecedentSupports {
    pub fn get(&self, antecedent: &[u32]) -> Option<u64> {
        self.trie
            .terminal(antecedent)
            .map(|t| self.counts[t as usize])
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Second pass: count every antecedent in the trie over all of `ts`.
/// Transaction chunks are scanned in parallel into private counter arrays
/// that are summed afterwards.
pub fn count_antecedent_supports(ts: &TransactionSet, trie: AntecedentTrie) -> AntecedentSupports {
    let width = trie.len();
    let counts = ts
        .transactions()
        .par_chunks(SCAN_CHUNK)
        .map(|chunk| {
            let mut partial = vec![0u64; width];
            for t in chunk {
                trie.count_into(t, &mut partial);
            }
            partial
        })
        .reduce(
            || vec![0u64; width],
            |mut acc, partial| {
                for (a, p) in acc.iter_mut().zip(partial) {
                    *a += p;
                }
                acc
            },
        );
    AntecedentSupports { trie, counts }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn insert_is_idempotent() {
        let mut trie = AntecedentTrie::new();
        let a = trie.insert(&[1, 3]);
        let b = trie.insert(&[1]);
        assert_eq!(trie.insert(&[1, 3]), a);
        assert_ne!(a, b);
        assert_eq!(trie.len(), 2);
        assert_eq!(trie.terminal(&[1, 3]), Some(a));
        assert_eq!(trie.terminal(&[3]), None);
    }

    #[test]
    fn counts_subsets_only() {
        let mut trie = AntecedentTrie::new();
        trie.insert(&[1, 3]);
        trie.insert(&[2]);
        trie.insert(&[1, 2, 3]);
        let mut counts = vec![0; 3];
        trie.count_into(&[1, 2, 3, 4], &mut counts);
        trie.count_into(&[1, 3], &mut counts);
        trie.count_into(&[2, 3], &mut counts);
        assert_eq!(counts, vec![2, 2, 1]);
    }
}
