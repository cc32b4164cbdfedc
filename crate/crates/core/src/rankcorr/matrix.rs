use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde_json::{json, Value};

use super::{kendall_tau, ndcc, overlap_at_k, spearman, RankedList, DEFAULT_OVERLAP_K};
use crate::error::{Error, Result};
use crate::rules::{Measure, ScoredRuleTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Spearman,
    Kendall,
    Overlap { k: usize },
    Ndcc,
}

impl Method {
    /// `[-1, 1]` for the correlations, `[0, 1]` for overlap.
    pub fn range(self) -> (f64, f64) {
        match self {
            Method::Overlap { .. } => (0.0, 1.0),
            _ => (-1.0, 1.0),
        }
    }

    pub fn with_k(self, k: usize) -> Self {
        match self {
            Method::Overlap { .. } => Method::Overlap { k },
            m => m,
        }
    }

    fn coefficient(self, a: &RankedList, b: &RankedList) -> Result<f64> {
        match self {
            Method::Spearman => spearman(a, b),
            Method::Kendall => kendall_tau(a, b),
            Method::Ndcc => ndcc(a, b),
            // A target may hold fewer rules than k; compare everything then.
            Method::Overlap { k } => overlap_at_k(a, b, k.min(a.len())),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Spearman => f.write_str("spearman"),
            Method::Kendall => f.write_str("kendall"),
            Method::Overlap { k } => write!(f, "overlap@{k}"),
            Method::Ndcc => f.write_str("ndcc"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "spearman" => return Ok(Method::Spearman),
            "kendall" | "kendall-tau" | "tau" => return Ok(Method::Kendall),
            "ndcc" => return Ok(Method::Ndcc),
            "overlap" => return Ok(Method::Overlap { k: DEFAULT_OVERLAP_K }),
            _ => {}
        }
        if let Some(k) = lower.strip_prefix("overlap@") {
            if let Ok(k) = k.parse::<usize>() {
                if k > 0 {
                    return Ok(Method::Overlap { k });
                }
            }
        }
        Err(Error::Argument(format!(
            "unknown method `{s}` (expected spearman, kendall, overlap@k or ndcc)"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Aggregation {
    /// One matrix per target, averaged.
    #[default]
    PerTarget,
    /// All rules ranked together.
    Pooled,
}

impl Aggregation {
    pub fn as_str(self) -> &'static str {
        match self {
            Aggregation::PerTarget => "per-target-averaged",
            Aggregation::Pooled => "pooled",
        }
    }
}

impl fmt::Display for Aggregation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Aggregation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "per-target-averaged" | "per-target" | "averaged" | "average" | "mean" => {
                Ok(Aggregation::PerTarget)
            }
            "pooled" | "pool" | "multi-target" => Ok(Aggregation::Pooled),
            _ => Err(Error::Argument(format!(
                "unknown aggregation `{s}` (expected per-target-averaged or pooled)"
            ))),
        }
    }
}

/// Square, symmetric similarity between measure rankings.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub method: Method,
    pub aggregation: Aggregation,
    pub measures: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl SimilarityMatrix {
    pub fn new(
        method: Method,
        aggregation: Aggregation,
        measures: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let n = measures.len();
        if values.len() != n || values.iter().any(|row| row.len() != n) {
            return Err(Error::Argument(format!("matrix is not {n}x{n}")));
        }
        for i in 0..n {
            for j in 0..i {
                if values[i][j] != values[j][i] {
                    return Err(Error::Argument(format!(
                        "matrix is not symmetric at ({}, {})",
                        measures[i], measures[j]
                    )));
                }
            }
        }
        Ok(SimilarityMatrix { method, aggregation, measures, values })
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn index_of(&self, measure: &str) -> Option<usize> {
        self.measures.iter().position(|m| m == measure)
    }

    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        Some(self.values[self.index_of(a)?][self.index_of(b)?])
    }

    /// Restrict to the named measures, in the given order.
    pub fn subset(&self, names: &[&str]) -> Result<Self> {
        let idx: Vec<usize> = names
            .iter()
            .map(|n| {
                self.index_of(n)
                    .ok_or_else(|| Error::UnknownMeasure((*n).to_string()))
            })
            .collect::<Result<_>>()?;
        Ok(SimilarityMatrix {
            method: self.method,
            aggregation: self.aggregation,
            measures: names.iter().map(|s| s.to_string()).collect(),
            values: idx
                .iter()
                .map(|&i| idx.iter().map(|&j| self.values[i][j]).collect())
                .collect(),
        })
    }

    pub fn to_json(&self) -> Value {
        json!({
            "method": self.method.to_string(),
            "aggregation": self.aggregation.as_str(),
            "measures": self.measures,
            "values": self.values,
        })
    }

    pub fn from_json(value: &Value) -> Result<Self> {
        let bad = |what: &str| Error::Argument(format!("matrix JSON: {what}"));
        let method = value["method"]
            .as_str()
            .ok_or_else(|| bad("missing method"))?
            .parse()?;
        let aggregation = value["aggregation"]
            .as_str()
            .ok_or_else(|| bad("missing aggregation"))?
            .parse()?;
        let measures: Vec<String> = serde_json::from_value(value["measures"].clone())?;
        let values: Vec<Vec<f64>> = serde_json::from_value(value["values"].clone())?;
        Self::new(method, aggregation, measures, values)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["measure".to_string()];
        header.extend(self.measures.iter().cloned());
        w.write_record(&header)?;
        for (name, row) in self.measures.iter().zip(&self.values) {
            let mut rec = vec![name.clone()];
            rec.extend(row.iter().map(f64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// 34x34 matrix over the full catalog.
pub fn correlation_matrix(
    table: &ScoredRuleTable,
    method: Method,
    aggregation: Aggregation,
) -> Result<SimilarityMatrix> {
    correlation_matrix_for(table, &Measure::ALL, method, aggregation)
}

pub fn correlation_matrix_for(
    table: &ScoredRuleTable,
    measures: &[Measure],
    method: Method,
    aggregation: Aggregation,
) -> Result<SimilarityMatrix> {
    if let Method::Overlap { k: 0 } = method {
        return Err(Error::Argument("overlap k must be at least 1".into()));
    }
    let names: Vec<String> = measures.iter().map(|m| m.name().to_string()).collect();
    let values = match aggregation {
        Aggregation::Pooled => {
            if table.len() < 2 {
                return Err(Error::Argument(format!(
                    "pooled ranking needs at least two rules, table has {}",
                    table.len()
                )));
            }
            single_matrix(table, measures, method)?
        }
        Aggregation::PerTarget => {
            let groups = table.rows_by_target();
            let usable: Vec<&(&str, Vec<usize>)> = groups
                .iter()
                .filter(|(target, rows)| {
                    if rows.len() < 2 {
                        log::warn!("target {target} has {} rule(s); skipped", rows.len());
                        false
                    } else {
                        true
                    }
                })
                .collect();
            if usable.is_empty() {
                return Err(Error::Argument(
                    "no target has at least two rules".into(),
                ));
            }
            let per_target = usable
                .par_iter()
                .map(|(_, rows)| single_matrix(&table.select(rows), measures, method))
                .collect::<Result<Vec<_>>>()?;
            mean_matrix(&per_target)
        }
    };
    SimilarityMatrix::new(method, aggregation, names, values)
}

fn single_matrix(
    table: &ScoredRuleTable,
    measures: &[Measure],
    method: Method,
) -> Result<Vec<Vec<f64>>> {
    let lists: Vec<RankedList> = measures
        .par_iter()
        .map(|&m| RankedList::from_scores(&table.column(m)))
        .collect();
    let m = measures.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let coeffs = pairs
        .par_iter()
        .map(|&(i, j)| method.coefficient(&lists[i], &lists[j]))
        .collect::<Result<Vec<_>>>()?;
    let mut values = vec![vec![1.0; m]; m];
    for (&(i, j), c) in pairs.iter().zip(coeffs) {
        values[i][j] = c;
        values[j][i] = c;
    }
    Ok(values)
}

// Summed in target order so the result does not depend on scheduling.
fn mean_matrix(mats: &[Vec<Vec<f64>>]) -> Vec<Vec<f64>> {
    let m = mats[0].len();
    let mut out = vec![vec![0.0; m]; m];
    for mat in mats {
        for i in 0..m {
            for j in 0..m {
                out[i][j] += mat[i][j];
            }
        }
    }
    let count = mats.len() as f64;
    for row in &mut out {
        for v in row.iter_mut() {
            *v /= count;
        }
    }
    out
}
