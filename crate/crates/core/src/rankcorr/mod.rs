//! Ranking similarity between measures: Spearman, Kendall, Overlap@k and
//! the discounted correlation coefficient (NDCC).

mod matrix;

pub use matrix::{correlation_matrix, correlation_matrix_for, Aggregation, Method, SimilarityMatrix};

use crate::error::{Error, Result};
use crate::rules::{Measure, ScoredRuleTable};

pub const DEFAULT_OVERLAP_K: usize = 20;

/// A strict ranking of rules `0..n`. Rank 1 is the best rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedList {
    order: Vec<usize>,
    ranks: Vec<usize>,
}

impl RankedList {
    /// Sort by score descending, then rule id ascending. Infinite scores
    /// are ordinary extremes.
    pub fn from_scores(scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..scores.len()).collect();
        // `+ 0.0` folds -0.0 into 0.0 so the two compare equal.
        order.sort_by(|&a, &b| {
            (scores[b] + 0.0)
                .total_cmp(&(scores[a] + 0.0))
                .then(a.cmp(&b))
        });
        Self::from_permutation(order)
    }

    /// `order[i]` is the rule at rank `i + 1`.
    pub fn from_order(order: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; order.len()];
        for &r in &order {
            if r >= order.len() || std::mem::replace(&mut seen[r], true) {
                return Err(Error::Argument(format!(
                    "ranking is not a permutation of 0..{}",
                    order.len()
                )));
            }
        }
        Ok(Self::from_permutation(order))
    }

    fn from_permutation(order: Vec<usize>) -> Self {
        let mut ranks = vec![0; order.len()];
        for (i, &r) in order.iter().enumerate() {
            ranks[r] = i + 1;
        }
        RankedList { order, ranks }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// 1-based rank of rule `id`.
    pub fn rank(&self, id: usize) -> usize {
        self.ranks[id]
    }

    pub fn top(&self, k: usize) -> &[usize] {
        &self.order[..k.min(self.order.len())]
    }

    pub fn reversed(&self) -> Self {
        Self::from_permutation(self.order.iter().rev().copied().collect())
    }
}

pub fn rank_by_measure(table: &ScoredRuleTable, measure: Measure) -> RankedList {
    RankedList::from_scores(&table.column(measure))
}

fn check_pair(a: &RankedList, b: &RankedList) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "rankings cover different rule sets ({} vs {} rules)",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Argument("at least two rules are needed".into()));
    }
    Ok(a.len())
}

pub fn spearman(a: &RankedList, b: &RankedList) -> Result<f64> {
    let n = check_pair(a, b)? as u128;
    let sum_sq: u128 = a
        .ranks
        .iter()
        .zip(&b.ranks)
        .map(|(&x, &y)| (x.abs_diff(y) as u128).pow(2))
        .sum();
    Ok(1.0 - 6.0 * sum_sq as f64 / (n * (n * n - 1)) as f64)
}

/// Kendall's tau via a merge-sort inversion count.
pub fn kendall_tau(a: &RankedList, b: &RankedList) -> Result<f64> {
    let n = check_pair(a, b)?;
    let mut seq: Vec<usize> = a.order.iter().map(|&r| b.ranks[r]).collect();
    let mut buf = vec![0; n];
    let discordant = count_inversions(&mut seq, &mut buf);
    let pairs = (n * (n - 1) / 2) as i64;
    Ok((pairs - 2 * discordant as i64) as f64 / pairs as f64)
}

fn count_inversions(seq: &mut [usize], buf: &mut [usize]) -> u64 {
    let n = seq.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut inv = {
        let (lo, hi) = seq.split_at_mut(mid);
        count_inversions(lo, &mut buf[..mid]) + count_inversions(hi, &mut buf[mid..])
    };
    let (mut i, mut j, mut k) = (0, mid, 0);
    while i < mid && j < n {
        if seq[i] <= seq[j] {
            buf[k] = seq[i];
            i += 1;
        } else {
            buf[k] = seq[j];
            j += 1;
            inv += (mid - i) as u64;
        }
        k += 1;
    }
    buf[k..k + mid - i].copy_from_slice(&seq[i..mid]);
    k += mid - i;
    buf[k..k + n - j].copy_from_slice(&seq[j..n]);
    seq.copy_from_slice(&buf[..n]);
    inv
}

/// Kendall's tau by direct pair counting. Quadratic; kept as a reference.
pub fn kendall_tau_pairwise(a: &RankedList, b: &RankedList) -> Result<f64> {
    let n = check_pair(a, b)?;
    let (mut concordant, mut discordant) = (0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let s = (a.ranks[i] as i64 - a.ranks[j] as i64) * (b.ranks[i] as i64 - b.ranks[j] as i64);
            if s > 0 {
                concordant += 1;
            } else if s < 0 {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((concordant - discordant) as f64 / pairs)
}

/// Fraction of the top-k rules shared by both rankings.
pub fn overlap_at_k(a: &RankedList, b: &RankedList, k: usize) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!(
            "rankings cover different rule sets ({} vs {} rules)",
            a.len(),
            b.len()
        )));
    }
    if k == 0 || k > a.len() {
        return Err(Error::Argument(format!(
            "k must lie in 1..={}, got {k}",
            a.len()
        )));
    }
    let shared = a.top(k).iter().filter(|&&r| b.ranks[r] <= k).count();
    Ok(shared as f64 / k as f64)
}

/// Discounted correlation: sum over rules of 1/(log(1+r1)·log(1+r2)).
pub fn dcc(a: &RankedList, b: &RankedList) -> Result<f64> {
    check_pair(a, b)?;
    Ok(dcc_with(a, b, f64::ln))
}

// Summed in the order of `b` so that dcc(b, b) and dcc(rev(b), b) add the
// same terms in the same order as the normalisation bounds.
fn dcc_with(a: &RankedList, b: &RankedList, log: impl Fn(f64) -> f64) -> f64 {
    b.order
        .iter()
        .enumerate()
        .map(|(i, &r)| 1.0 / (log(1.0 + a.ranks[r] as f64) * log(2.0 + i as f64)))
        .sum()
}

fn ndcc_with(a: &RankedList, b: &RankedList, log: impl Fn(f64) -> f64 + Copy) -> Result<f64> {
    let n = check_pair(a, b)?;
    let max: f64 = (1..=n)
        .map(|r| 1.0 / (log(1.0 + r as f64) * log(1.0 + r as f64)))
        .sum();
    let min: f64 = (1..=n)
        .map(|r| 1.0 / (log(2.0 + (n - r) as f64) * log(1.0 + r as f64)))
        .sum();
    let avg = (max + min) / 2.0;
    Ok((dcc_with(a, b, log) - avg) / (max - avg))
}

/// DCC normalised to [-1, 1] between the reversed and the identical
/// ranking of `b`. Natural logarithm.
pub fn ndcc(a: &RankedList, b: &RankedList) -> Result<f64> {
    ndcc_with(a, b, f64::ln)
}

/// NDCC with logarithms in an arbitrary base.
pub fn ndcc_base(a: &RankedList, b: &RankedList, base: f64) -> Result<f64> {
    if !(base > 0.0 && base != 1.0 && base.is_finite()) {
        return Err(Error::Argument(format!("invalid logarithm base {base}")));
    }
    ndcc_with(a, b, move |x: f64| x.log(base))
}
