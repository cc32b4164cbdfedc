//! wasm-bindgen surface for the static demo page in `www/`. Each export
//! takes plain strings or numbers and returns a JSON string; the `*_json`
//! functions hold the logic so it can be tested natively.

use std::collections::BTreeMap;

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use rulerank_core::clusterlab::{group_report, DEFAULT_THETA, DEFAULT_TOP_K};
use rulerank_core::corpus::{synth_corpus, Scenario, SynthConfig, TransactionSet};
use rulerank_core::miner::TargetSet;
use rulerank_core::pipeline::{mine_and_score, resolve_targets, TargetSpec};
use rulerank_core::rankcorr::{
    correlation_matrix, kendall_tau, ndcc, overlap_at_k, spearman, Aggregation, Method, RankedList,
};
use rulerank_core::rules::{Contingency, Measure};
use rulerank_core::{Error, Result};

fn tokens(s: &str) -> Vec<&str> {
    s.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect()
}

/// Compare two orderings of the same labels, best first.
pub fn compare_rankings_json(first: &str, second: &str, k: usize) -> Result<Value> {
    let a = tokens(first);
    let b = tokens(second);
    let index: BTreeMap<&str, usize> = a.iter().enumerate().map(|(i, &l)| (l, i)).collect();
    if index.len() != a.len() {
        return Err(Error::Argument("the first ranking repeats a label".into()));
    }
    let order_b = b
        .iter()
        .map(|l| index.get(l).copied().ok_or_else(|| Error::Argument(format!("'{l}' is missing from the first ranking"))))
        .collect::<Result<Vec<_>>>()?;
    let la = RankedList::from_order((0..a.len()).collect())?;
    let lb = RankedList::from_order(order_b)
        .map_err(|_| Error::Argument("the two rankings must hold the same labels".into()))?;
    Ok(json!({
        "n": a.len(),
        "spearman": spearman(&la, &lb)?,
        "kendall": kendall_tau(&la, &lb)?,
        "overlap": overlap_at_k(&la, &lb, k.clamp(1, a.len()))?,
        "k": k.clamp(1, a.len()),
        "ndcc": ndcc(&la, &lb)?,
    }))
}

/// All measures for one contingency table given as raw counts.
pub fn score_rule_json(support_a: u64, support_b: u64, support_ab: u64, n: u64) -> Result<Value> {
    let ct = Contingency::from_counts(support_a, support_b, support_ab, n)?;
    let rows: Vec<Value> = Measure::ALL
        .iter()
        .map(|&m| {
            let v = m.evaluate(&ct);
            json!({
                "measure": m.name(),
                "group": m.group().as_str(),
                "value": if v.is_finite() { json!(v) } else { json!(v.to_string()) },
            })
        })
        .collect();
    Ok(Value::Array(rows))
}

/// Small seeded corpus as text, one receipt per line.
pub fn synth_baskets_text(seed: u64, receipts: usize) -> Result<String> {
    let corpus = synth_corpus(&SynthConfig {
        seed,
        n_customers: 200,
        n_products: 60,
        n_receipts: receipts,
        skew: 1.1,
    })?;
    let mut lines: Vec<String> = Vec::new();
    let mut current = "";
    for r in &corpus.records {
        if r.receipt_id != current {
            current = &r.receipt_id;
            lines.push(String::new());
        }
        let line = lines.last_mut().unwrap();
        if !line.is_empty() {
            line.push(' ');
        }
        line.push_str(&r.product_id);
    }
    Ok(lines.join("\n"))
}

/// Mine the baskets for the given targets (or the most frequent items),
/// build the measure similarity matrix and cluster it.
pub fn cluster_measures_json(baskets: &str, targets: &str, epsilon: u32, method: &str) -> Result<Value> {
    let rows: Vec<Vec<&str>> = baskets.lines().map(tokens).filter(|r| !r.is_empty()).collect();
    let ts = TransactionSet::from_labels(Scenario::ProductReceipt, rows)?;
    let wanted = tokens(targets);
    let spec = if wanted.is_empty() {
        TargetSpec::TopN(5)
    } else {
        TargetSpec::Labels(wanted.iter().map(|s| s.to_string()).collect())
    };
    let ids = resolve_targets(&ts, &spec)?;
    let method: Method = method.parse()?;
    let table = mine_and_score(&ts, &TargetSet::new(ids, epsilon.max(1))?)?;
    let matrix = correlation_matrix(&table, method, Aggregation::PerTarget)?;
    let (dendrogram, groups) = group_report(&matrix, &table, DEFAULT_THETA, DEFAULT_TOP_K)?;
    Ok(json!({
        "transactions": ts.len(),
        "rules": table.len(),
        "targets": table.targets(),
        "matrix": matrix.to_json(),
        "leaf_order": dendrogram.leaves(),
        "dendrogram": dendrogram.to_json(),
        "groups": groups,
    }))
}

fn to_js(r: Result<Value>) -> std::result::Result<String, JsError> {
    r.map(|v| v.to_string()).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn compare_rankings(first: &str, second: &str, k: usize) -> std::result::Result<String, JsError> {
    to_js(compare_rankings_json(first, second, k))
}

#[wasm_bindgen]
pub fn score_rule(support_a: u64, support_b: u64, support_ab: u64, n: u64) -> std::result::Result<String, JsError> {
    to_js(score_rule_json(support_a, support_b, support_ab, n))
}

#[wasm_bindgen]
pub fn synth_baskets(seed: u64, receipts: usize) -> std::result::Result<String, JsError> {
    synth_baskets_text(seed, receipts).map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub fn cluster_measures(baskets: &str, targets: &str, epsilon: u32, method: &str) -> std::result::Result<String, JsError> {
    to_js(cluster_measures_json(baskets, targets, epsilon, method))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_rankings() {
        let v = compare_rankings_json("r1 r2 r3 r4", "r2 r3 r1 r4", 2).unwrap();
        assert!((v["spearman"].as_f64().unwrap() - 0.4).abs() < 1e-12);
        assert!((v["kendall"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(v["overlap"].as_f64().unwrap(), 0.5);
        assert!((v["ndcc"].as_f64().unwrap() + 0.18).abs() < 0.005);
    }

    #[test]
    fn mismatched_rankings_rejected() {
        assert!(compare_rankings_json("a b c", "a b d", 2).is_err());
        assert!(compare_rankings_json("a a b", "a b", 2).is_err());
        assert!(compare_rankings_json("a b", "a b c", 2).is_err());
    }

    #[test]
    fn scores_every_measure() {
        let v = score_rule_json(20, 50, 10, 100).unwrap();
        let rows = v.as_array().unwrap();
        assert_eq!(rows.len(), 34);
        let lift = rows.iter().find(|r| r["measure"] == "Lift").unwrap();
        assert!((lift["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert!(score_rule_json(2, 3, 4, 10).is_err());
    }

    #[test]
    fn example_clusters() {
        let baskets = "a b c x y\na c y\na b x y\nb c x y\n";
        let v = cluster_measures_json(baskets, "x, y", 2, "ndcc").unwrap();
        assert_eq!(v["rules"], 9);
        assert_eq!(v["leaf_order"].as_array().unwrap().len(), 34);
        let grouped: usize = v["groups"].as_array().unwrap().iter().map(|g| g["members"].as_array().unwrap().len()).sum();
        assert_eq!(grouped, 34);
        assert!(cluster_measures_json(baskets, "q", 2, "ndcc").is_err());
        assert!(cluster_measures_json(baskets, "x", 2, "pearson").is_err());
    }

    #[test]
    fn synthetic_baskets_cluster() {
        let text = synth_baskets_text(3, 400).unwrap();
        assert_eq!(text.lines().count(), 400);
        assert_eq!(text, synth_baskets_text(3, 400).unwrap());
        let v = cluster_measures_json(&text, "", 5, "kendall").unwrap();
        assert!(v["rules"].as_u64().unwrap() >= 2);
    }
}
