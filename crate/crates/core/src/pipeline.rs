//! Glue from a transaction set to a scored rule table.

use crate::corpus::{ItemKind, TransactionSet};
use crate::error::{Error, Result};
use crate::miner::{count_antecedent_supports, mine, TargetSet};
use crate::rules::{derive_rules, score_table, ScoredRuleTable};

/// Which items to use as rule consequents.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetSpec {
    Labels(Vec<String>),
    /// The N most frequent eligible items: categories for DEMO, products
    /// otherwise.
    TopN(usize),
}

/// Resolve a target specification to item ids, in ascending id order.
pub fn resolve_targets(ts: &TransactionSet, spec: &TargetSpec) -> Result<Vec<u32>> {
    let dict = ts.dictionary();
    let mut ids = match spec {
        TargetSpec::Labels(labels) => {
            if labels.is_empty() {
                return Err(Error::Argument("no targets given".into()));
            }
            labels
                .iter()
                .map(|l| {
                    dict.id(l).ok_or_else(|| {
                        Error::Argument(format!(
                            "unknown target `{l}`; nearest labels: {}",
                            dict.nearest(l, 3).join(", ")
                        ))
                    })
                })
                .collect::<Result<Vec<_>>>()?
        }
        TargetSpec::TopN(n) => {
            if *n == 0 {
                return Err(Error::Argument("--top-targets must be at least 1".into()));
            }
            let want = match ts.scenario() {
                crate::corpus::Scenario::Demo => ItemKind::Category,
                _ => ItemKind::Product,
            };
            let supports = ts.item_supports();
            let mut eligible: Vec<u32> = (0..dict.len() as u32)
                .filter(|&i| dict.kind(i) == Some(want) && supports[i as usize] > 0)
                .collect();
            eligible.sort_by(|&a, &b| supports[b as usize].cmp(&supports[a as usize]).then(a.cmp(&b)));
            eligible.truncate(*n);
            eligible
        }
    };
    ids.sort_unstable();
    ids.dedup();
    Ok(ids)
}

/// Mine closed itemsets per target, count antecedent supports over the
/// whole dataset and score every derived rule.
pub fn mine_and_score(ts: &TransactionSet, targets: &TargetSet) -> Result<ScoredRuleTable> {
    let mined = mine(ts, targets);
    log::info!("{} closed itemsets, {} antecedents", mined.itemsets.len(), mined.antecedents.len());
    let supports = count_antecedent_supports(ts, mined.antecedents);
    let rules = derive_rules(&mined.itemsets, &supports, &mined.target_supports, ts.len() as u64)?;
    score_table(&rules, ts.dictionary(), Some(ts.scenario()))
}
