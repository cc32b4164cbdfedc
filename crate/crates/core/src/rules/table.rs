use std::io::{BufRead, Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::{AssociationRule, Contingency, Measure};
use crate::corpus::{ItemDictionary, Scenario};
use crate::error::{Error, Result};

/// Columns preceding the 34 measure columns in the CSV export.
pub const CSV_FIXED_COLUMNS: [&str; 8] = [
    "antecedent",
    "consequent",
    "support_a",
    "support_b",
    "support_ab",
    "n",
    "confidence",
    "recall",
];

/// A rule with its display triple (support, confidence, recall) and one
/// score per catalog measure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRule {
    pub antecedent: Vec<String>,
    pub consequent: String,
    pub support_a: u64,
    pub support_b: u64,
    pub support_ab: u64,
    pub n: u64,
    pub confidence: f64,
    pub recall: f64,
    pub scores: Vec<f64>,
}

impl ScoredRule {
    pub fn score(&self, measure: Measure) -> f64 {
        self.scores[measure.index()]
    }

    pub fn contingency(&self) -> Result<Contingency> {
        Contingency::from_counts(self.support_a, self.support_b, self.support_ab, self.n)
    }

    /// Score a rule given as labels and raw counts.
    pub fn from_counts(
        antecedent: Vec<String>,
        consequent: String,
        support_a: u64,
        support_b: u64,
        support_ab: u64,
        n: u64,
    ) -> Result<Self> {
        let ct = Contingency::from_counts(support_a, support_b, support_ab, n)?;
        Ok(ScoredRule {
            antecedent,
            consequent,
            support_a,
            support_b,
            support_ab,
            n,
            confidence: ct.confidence(),
            recall: ct.recall(),
            scores: Measure::ALL.iter().map(|m| m.evaluate(&ct)).collect(),
        })
    }
}

/// Rules × 34 measure columns.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredRuleTable {
    scenario: Option<Scenario>,
    rows: Vec<ScoredRule>,
}

impl ScoredRuleTable {
    pub fn new(scenario: Option<Scenario>, rows: Vec<ScoredRule>) -> Result<Self> {
        for (i, r) in rows.iter().enumerate() {
            if r.scores.len() != Measure::ALL.len() {
                return Err(Error::Integrity(format!(
                    "row {i} has {} scores, expected {}",
                    r.scores.len(),
                    Measure::ALL.len()
                )));
            }
            if let Some(m) = r.scores.iter().position(|s| s.is_nan()) {
                return Err(Error::Integrity(format!(
                    "row {i}: {} is NaN",
                    Measure::ALL[m].name()
                )));
            }
        }
        Ok(ScoredRuleTable { scenario, rows })
    }

    pub fn scenario(&self) -> Option<Scenario> {
        self.scenario
    }

    pub fn rows(&self) -> &[ScoredRule] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, measure: Measure) -> Vec<f64> {
        self.rows.iter().map(|r| r.score(measure)).collect()
    }

    /// Distinct consequents, in order of first appearance.
    pub fn targets(&self) -> Vec<&str> {
        let mut seen = std::collections::HashSet::new();
        self.rows
            .iter()
            .map(|r| r.consequent.as_str())
            .filter(|c| seen.insert(*c))
            .collect()
    }

    /// Row indices of each target, targets in first-appearance order.
    pub fn rows_by_target(&self) -> Vec<(&str, Vec<usize>)> {
        let targets = self.targets();
        let pos: std::collections::HashMap<&str, usize> =
            targets.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let mut groups: Vec<(&str, Vec<usize>)> = targets.iter().map(|t| (*t, Vec::new())).collect();
        for (i, r) in self.rows.iter().enumerate() {
            groups[pos[r.consequent.as_str()]].1.push(i);
        }
        groups
    }

    /// Sub-table with the given rows, in the given order.
    pub fn select(&self, rows: &[usize]) -> ScoredRuleTable {
        ScoredRuleTable {
            scenario: self.scenario,
            rows: rows.iter().map(|&i| self.rows[i].clone()).collect(),
        }
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = CSV_FIXED_COLUMNS
            .iter()
            .copied()
            .chain(Measure::ALL.iter().map(|m| m.name()))
            .collect();
        w.write_record(&header)?;
        for r in &self.rows {
            let mut fields = vec![
                r.antecedent.join(" "),
                r.consequent.clone(),
                r.support_a.to_string(),
                r.support_b.to_string(),
                r.support_ab.to_string(),
                r.n.to_string(),
                r.confidence.to_string(),
                r.recall.to_string(),
            ];
            fields.extend(r.scores.iter().map(f64::to_string));
            w.write_record(&fields)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Read a CSV export. Antecedent labels are split on single spaces.
    pub fn read_csv<R: Read>(input: R, source_name: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = reader.headers()?.clone();
        let expected: Vec<&str> = CSV_FIXED_COLUMNS
            .iter()
            .copied()
            .chain(Measure::ALL.iter().map(|m| m.name()))
            .collect();
        for (i, want) in expected.iter().enumerate() {
            match header.get(i) {
                Some(got) if got == *want => {}
                Some(got) => {
                    return Err(Error::parse(
                        source_name,
                        1,
                        format!("column {} is `{got}`, expected `{want}`", i + 1),
                    ))
                }
                None => {
                    return Err(Error::parse(source_name, 1, format!("missing column `{want}`")))
                }
            }
        }
        if header.len() > expected.len() {
            return Err(Error::parse(
                source_name,
                1,
                format!("unexpected column `{}`", &header[expected.len()]),
            ));
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let err = |col: &str, v: &str| {
                Error::parse(source_name, line, format!("bad value `{v}` in column `{col}`"))
            };
            let int = |i: usize| -> Result<u64> {
                record[i].parse().map_err(|_| err(expected[i], &record[i]))
            };
            let float = |i: usize| -> Result<f64> {
                record[i]
                    .parse::<f64>()
                    .ok()
                    .filter(|v| !v.is_nan())
                    .ok_or_else(|| err(expected[i], &record[i]))
            };
            rows.push(ScoredRule {
                antecedent: record[0].split(' ').map(str::to_string).collect(),
                consequent: record[1].to_string(),
                support_a: int(2)?,
                support_b: int(3)?,
                support_ab: int(4)?,
                n: int(5)?,
                confidence: float(6)?,
                recall: float(7)?,
                scores: (8..expected.len()).map(float).collect::<Result<_>>()?,
            });
        }
        ScoredRuleTable::new(None, rows)
    }

    /// JSON lines with the same fields as the CSV; the antecedent is an
    /// array and infinite scores are written as "inf" / "-inf".
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for r in &self.rows {
            let mut obj = Map::new();
            obj.insert("antecedent".into(), Value::from(r.antecedent.clone()));
            obj.insert("consequent".into(), Value::from(r.consequent.clone()));
            obj.insert("support_a".into(), Value::from(r.support_a));
            obj.insert("support_b".into(), Value::from(r.support_b));
            obj.insert("support_ab".into(), Value::from(r.support_ab));
            obj.insert("n".into(), Value::from(r.n));
            obj.insert("confidence".into(), extended_to_json(r.confidence));
            obj.insert("recall".into(), extended_to_json(r.recall));
            for m in Measure::ALL {
                obj.insert(m.name().into(), extended_to_json(r.score(m)));
            }
            serde_json::to_writer(&mut out, &Value::Object(obj))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn read_jsonl<R: BufRead>(input: R, source_name: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let lineno = idx as u64 + 1;
            let bad = |msg: String| Error::parse(source_name, lineno, msg);
            let obj: Map<String, Value> =
                serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
            let field = |k: &str| obj.get(k).ok_or_else(|| bad(format!("missing field `{k}`")));
            let int = |k: &str| -> Result<u64> {
                field(k)?.as_u64().ok_or_else(|| bad(format!("`{k}` is not an integer")))
            };
            let float = |k: &str| -> Result<f64> {
                extended_from_json(field(k)?).ok_or_else(|| bad(format!("`{k}` is not a number")))
            };
            let antecedent = field("antecedent")?
                .as_array()
                .and_then(|a| a.iter().map(|v| v.as_str().map(str::to_string)).collect())
                .ok_or_else(|| bad("`antecedent` is not an array of strings".into()))?;
            let consequent = field("consequent")?
                .as_str()
                .ok_or_else(|| bad("`consequent` is not a string".into()))?
                .to_string();
            rows.push(ScoredRule {
                antecedent,
                consequent,
                support_a: int("support_a")?,
                support_b: int("support_b")?,
                support_ab: int("support_ab")?,
                n: int("n")?,
                confidence: float("confidence")?,
                recall: float("recall")?,
                scores: Measure::ALL
                    .iter()
                    .map(|m| float(m.name()))
                    .collect::<Result<_>>()?,
            });
        }
        ScoredRuleTable::new(None, rows)
    }
}

pub(crate) fn extended_to_json(v: f64) -> Value {
    if v == f64::INFINITY {
        Value::from("inf")
    } else if v == f64::NEG_INFINITY {
        Value::from("-inf")
    } else {
        Value::from(v)
    }
}

pub(crate) fn extended_from_json(v: &Value) -> Option<f64> {
    match v {
        Value::Number(n) => n.as_f64(),
        Value::String(s) if s == "inf" => Some(f64::INFINITY),
        Value::String(s) if s == "-inf" => Some(f64::NEG_INFINITY),
        _ => None,
    }
}

/// Score every rule under every measure. Rows come out ordered by
/// (consequent id, antecedent ids), independent of input order.
pub fn score_table(
    rules: &[AssociationRule],
    dictionary: &ItemDictionary,
    scenario: Option<Scenario>,
) -> Result<ScoredRuleTable> {
    let mut order: Vec<&AssociationRule> = rules.iter().collect();
    order.sort_by(|a, b| (a.consequent, &a.antecedent).cmp(&(b.consequent, &b.antecedent)));
    let label = |id: u32| -> Result<String> {
        dictionary
            .label(id)
            .map(str::to_string)
            .ok_or_else(|| Error::Integrity(format!("item {id} missing from dictionary")))
    };
    let rows = order
        .par_iter()
        .map(|r| {
            ScoredRule::from_counts(
                r.antecedent.iter().map(|&i| label(i)).collect::<Result<_>>()?,
                label(r.consequent)?,
                r.support_a,
                r.support_b,
                r.support_ab,
                r.n,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    ScoredRuleTable::new(scenario, rows)
}
