//! Association rules derived from mined itemsets, their contingency
//! tables, and scoring under the interestingness-measure catalog.

mod measures;
mod table;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::miner::{AntecedentSupports, ClosedItemset};

pub use measures::{Equivalence, Group, Measure, REVIEW_MEASURES};
pub use table::{score_table, ScoredRule, ScoredRuleTable, CSV_FIXED_COLUMNS};

/// Rule A → B with its raw support counts over n transactions.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssociationRule {
    pub antecedent: Vec<u32>,
    pub consequent: u32,
    pub support_a: u64,
    pub support_b: u64,
    pub support_ab: u64,
    pub n: u64,
}

impl AssociationRule {
    pub fn contingency(&self) -> Result<Contingency> {
        if self.antecedent.binary_search(&self.consequent).is_ok() {
            return Err(Error::Integrity(format!(
                "consequent {} appears in its own antecedent",
                self.consequent
            )));
        }
        Contingency::from_counts(self.support_a, self.support_b, self.support_ab, self.n)
    }
}

/// Four-cell table of a rule, as probabilities over n transactions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Contingency {
    pub n: u64,
    pub support_a: u64,
    pub support_b: u64,
    pub support_ab: u64,
    pub p_a: f64,
    pub p_b: f64,
    pub p_ab: f64,
    /// P(A¬B)
    pub p_anb: f64,
    /// P(¬AB)
    pub p_nab: f64,
    /// P(¬A¬B)
    pub p_nanb: f64,
}

impl Contingency {
    pub fn from_counts(support_a: u64, support_b: u64, support_ab: u64, n: u64) -> Result<Self> {
        if support_ab == 0
            || support_ab > support_a.min(support_b)
            || support_a.max(support_b) > n
            || support_a + support_b - support_ab > n
        {
            return Err(Error::Integrity(format!(
                "inconsistent supports: |A|={support_a} |B|={support_b} |AB|={support_ab} n={n}"
            )));
        }
        let nf = n as f64;
        // Every cell comes straight from an integer count so none can go
        // negative through rounding.
        Ok(Contingency {
            n,
            support_a,
            support_b,
            support_ab,
            p_a: support_a as f64 / nf,
            p_b: support_b as f64 / nf,
            p_ab: support_ab as f64 / nf,
            p_anb: (support_a - support_ab) as f64 / nf,
            p_nab: (support_b - support_ab) as f64 / nf,
            p_nanb: (n + support_ab - support_a - support_b) as f64 / nf,
        })
    }

    pub fn confidence(&self) -> f64 {
        self.support_ab as f64 / self.support_a as f64
    }

    pub fn recall(&self) -> f64 {
        self.support_ab as f64 / self.support_b as f64
    }
}

/// One rule (Q \ {b}) → b per closed itemset. `target_supports` gives
/// support({b}); antecedent supports come from the second pass.
pub fn derive_rules(
    itemsets: &[ClosedItemset],
    antecedent_supports: &AntecedentSupports,
    target_supports: &BTreeMap<u32, u64>,
    n: u64,
) -> Result<Vec<AssociationRule>> {
    itemsets
        .iter()
        .map(|q| {
            let antecedent = q.antecedent();
            let support_a = antecedent_supports.get(&antecedent).ok_or_else(|| {
                Error::Integrity(format!("no support counted for antecedent {antecedent:?}"))
            })?;
            let support_b = *target_supports.get(&q.target).ok_or_else(|| {
                Error::Integrity(format!("no support recorded for target {}", q.target))
            })?;
            let rule = AssociationRule {
                antecedent,
                consequent: q.target,
                support_a,
                support_b,
                support_ab: q.support,
                n,
            };
            rule.contingency()?;
            Ok(rule)
        })
        .collect()
}
