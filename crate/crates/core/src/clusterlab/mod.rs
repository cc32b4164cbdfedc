//! Average-linkage clustering of measures by ranking similarity, group
//! cuts, top-k annotation and representative selection.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::rankcorr::{RankedList, SimilarityMatrix};
use crate::rules::{Measure, ScoredRuleTable};

pub const DEFAULT_THETA: f64 = 0.9;
pub const DEFAULT_TOP_K: usize = 20;

/// Binary merge tree. Leaves carry their row index in the source matrix.
#[derive(Debug, Clone, PartialEq)]
pub enum Dendrogram {
    Leaf { index: usize, name: String },
    Merge {
        left: Box<Dendrogram>,
        right: Box<Dendrogram>,
        similarity: f64,
    },
}

impl Dendrogram {
    pub fn leaves(&self) -> Vec<&str> {
        let mut out = Vec::new();
        self.walk_leaves(&mut |_, name| out.push(name));
        out
    }

    fn leaf_indices(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.walk_leaves(&mut |i, _| out.push(i));
        out
    }

    fn walk_leaves<'a>(&'a self, f: &mut impl FnMut(usize, &'a str)) {
        match self {
            Dendrogram::Leaf { index, name } => f(*index, name),
            Dendrogram::Merge { left, right, .. } => {
                left.walk_leaves(f);
                right.walk_leaves(f);
            }
        }
    }

    /// Merge similarities, children before parents.
    pub fn merge_similarities(&self) -> Vec<f64> {
        let mut out = Vec::new();
        fn go(d: &Dendrogram, out: &mut Vec<f64>) {
            if let Dendrogram::Merge { left, right, similarity } = d {
                go(left, out);
                go(right, out);
                out.push(*similarity);
            }
        }
        go(self, &mut out);
        out
    }

    fn min_internal(&self) -> f64 {
        match self {
            Dendrogram::Leaf { .. } => f64::INFINITY,
            Dendrogram::Merge { left, right, similarity } => {
                similarity.min(left.min_internal()).min(right.min_internal())
            }
        }
    }

    /// Leaves become strings; merges become `{left, right, similarity}`.
    pub fn to_json(&self) -> Value {
        match self {
            Dendrogram::Leaf { name, .. } => Value::from(name.as_str()),
            Dendrogram::Merge { left, right, similarity } => json!({
                "left": left.to_json(),
                "right": right.to_json(),
                "similarity": similarity,
            }),
        }
    }

    /// Graphviz rendering with merge similarities as node labels.
    pub fn to_dot(&self) -> String {
        fn go(d: &Dendrogram, next: &mut usize, out: &mut String) -> usize {
            let id = *next;
            *next += 1;
            match d {
                Dendrogram::Leaf { name, .. } => {
                    let _ = writeln!(out, "  n{id} [shape=box, label=\"{}\"];", name.replace('"', "\\\""));
                }
                Dendrogram::Merge { left, right, similarity } => {
                    let _ = writeln!(out, "  n{id} [shape=ellipse, label=\"{similarity:.3}\"];");
                    let l = go(left, next, out);
                    let r = go(right, next, out);
                    let _ = writeln!(out, "  n{id} -> n{l};\n  n{id} -> n{r};");
                }
            }
            id
        }
        let mut out = String::from("digraph dendrogram {\n  rankdir=LR;\n");
        go(self, &mut 0, &mut out);
        out.push_str("}\n");
        out
    }
}

struct Cluster {
    tree: Dendrogram,
    size: usize,
    min_name: String,
}

/// Agglomerative clustering that repeatedly merges the pair of clusters
/// with the highest average pairwise similarity. Ties go to the pair whose
/// smallest member names sort first.
pub fn average_linkage(s: &SimilarityMatrix) -> Result<Dendrogram> {
    let n = s.len();
    if n == 0 {
        return Err(Error::Argument("empty similarity matrix".into()));
    }
    if s.values.len() != n || s.values.iter().any(|r| r.len() != n) {
        return Err(Error::Argument(format!("matrix is not {n}x{n}")));
    }
    for i in 0..n {
        for j in 0..i {
            if s.values[i][j] != s.values[j][i] || s.values[i][j].is_nan() {
                return Err(Error::Argument(format!(
                    "similarity matrix is not symmetric at ({}, {})",
                    s.measures[i], s.measures[j]
                )));
            }
        }
    }
    let mut clusters: Vec<Option<Cluster>> = s
        .measures
        .iter()
        .enumerate()
        .map(|(i, name)| {
            Some(Cluster {
                tree: Dendrogram::Leaf { index: i, name: name.clone() },
                size: 1,
                min_name: name.clone(),
            })
        })
        .collect();
    // Sums of pairwise similarities between clusters.
    let mut sums = s.values.clone();
    for _ in 1..n {
        let mut best: Option<(f64, (&str, &str), usize, usize)> = None;
        for i in 0..n {
            let Some(ci) = &clusters[i] else { continue };
            for j in i + 1..n {
                let Some(cj) = &clusters[j] else { continue };
                let avg = sums[i][j] / (ci.size * cj.size) as f64;
                let key = if ci.min_name <= cj.min_name {
                    (ci.min_name.as_str(), cj.min_name.as_str())
                } else {
                    (cj.min_name.as_str(), ci.min_name.as_str())
                };
                let better = match &best {
                    None => true,
                    Some((b, bkey, _, _)) => avg > *b || (avg == *b && key < *bkey),
                };
                if better {
                    best = Some((avg, key, i, j));
                }
            }
        }
        let (similarity, _, i, j) = best.expect("at least two clusters remain");
        let cj = clusters[j].take().unwrap();
        let ci = clusters[i].take().unwrap();
        let (left, right) = if ci.min_name <= cj.min_name { (ci, cj) } else { (cj, ci) };
        for k in 0..n {
            if k != i && k != j {
                let merged = sums[i][k] + sums[j][k];
                sums[i][k] = merged;
                sums[k][i] = merged;
            }
        }
        clusters[i] = Some(Cluster {
            size: left.size + right.size,
            min_name: left.min_name.clone(),
            tree: Dendrogram::Merge {
                left: Box::new(left.tree),
                right: Box::new(right.tree),
                similarity,
            },
        });
    }
    Ok(clusters.into_iter().flatten().next().unwrap().tree)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeasureGroup {
    pub label: String,
    pub members: Vec<String>,
    /// Reference families (G1a..G6) that the members belong to.
    pub reference_groups: Vec<String>,
    pub mean_top_recall: Option<f64>,
    pub mean_top_confidence: Option<f64>,
    pub representative: Option<String>,
}

impl MeasureGroup {
    fn new(label: String, members: Vec<String>) -> Self {
        let mut reference_groups: Vec<String> = members
            .iter()
            .filter_map(|m| Measure::from_name(m))
            .map(|m| m.group().as_str().to_string())
            .collect();
        reference_groups.sort();
        reference_groups.dedup();
        MeasureGroup {
            label,
            members,
            reference_groups,
            mean_top_recall: None,
            mean_top_confidence: None,
            representative: None,
        }
    }
}

/// Maximal subtrees whose merges all sit at or above `theta`. Members keep
/// matrix order; groups are ordered by their first member.
pub fn cut_at_threshold(d: &Dendrogram, theta: f64) -> Vec<MeasureGroup> {
    fn go<'a>(d: &'a Dendrogram, theta: f64, out: &mut Vec<&'a Dendrogram>) {
        match d {
            Dendrogram::Merge { left, right, .. } if d.min_internal() < theta => {
                go(left, theta, out);
                go(right, theta, out);
            }
            _ => out.push(d),
        }
    }
    let mut subtrees = Vec::new();
    go(d, theta, &mut subtrees);
    let mut groups: Vec<Vec<(usize, String)>> = subtrees
        .iter()
        .map(|t| {
            let mut members: Vec<(usize, String)> = t
                .leaf_indices()
                .into_iter()
                .zip(t.leaves().into_iter().map(str::to_string))
                .collect();
            members.sort();
            members
        })
        .collect();
    groups.sort();
    groups
        .into_iter()
        .enumerate()
        .map(|(k, members)| {
            MeasureGroup::new(
                format!("C{}", k + 1),
                members.into_iter().map(|(_, name)| name).collect(),
            )
        })
        .collect()
}

/// Per measure: mean recall and mean confidence of its top-k rules for each
/// target, averaged over targets. Targets with fewer than k rules use all
/// of them.
pub fn top_k_profile(table: &ScoredRuleTable, measure: Measure, k: usize) -> Option<(f64, f64)> {
    let groups = table.rows_by_target();
    if groups.is_empty() || k == 0 {
        return None;
    }
    let (mut recall, mut confidence) = (0.0, 0.0);
    for (_, rows) in &groups {
        let scores: Vec<f64> = rows.iter().map(|&i| table.rows()[i].score(measure)).collect();
        let ranked = RankedList::from_scores(&scores);
        // Row order, so equal top-k sets give bit-equal sums.
        let mut top = ranked.top(k).to_vec();
        top.sort_unstable();
        let (r, c) = top.iter().fold((0.0, 0.0), |(r, c), &local| {
            let row = &table.rows()[rows[local]];
            (r + row.recall, c + row.confidence)
        });
        recall += r / top.len() as f64;
        confidence += c / top.len() as f64;
    }
    let t = groups.len() as f64;
    Some((recall / t, confidence / t))
}

pub fn annotate_groups(groups: &mut [MeasureGroup], table: &ScoredRuleTable, k: usize) -> Result<()> {
    for g in groups.iter_mut() {
        let measures = g
            .members
            .iter()
            .map(|m| Measure::from_name(m).ok_or_else(|| Error::UnknownMeasure(m.clone())))
            .collect::<Result<Vec<_>>>()?;
        let profiles: Vec<Option<(f64, f64)>> = measures
            .par_iter()
            .map(|&m| top_k_profile(table, m, k))
            .collect();
        let present: Vec<(f64, f64)> = profiles.into_iter().flatten().collect();
        if present.is_empty() {
            g.mean_top_recall = None;
            g.mean_top_confidence = None;
        } else {
            let n = present.len() as f64;
            g.mean_top_recall = Some(present.iter().map(|p| p.0).sum::<f64>() / n);
            g.mean_top_confidence = Some(present.iter().map(|p| p.1).sum::<f64>() / n);
        }
    }
    Ok(())
}

/// The member with the highest mean similarity to the rest of its group.
/// Ties go to the lexicographically smallest name.
pub fn select_representatives(groups: &mut [MeasureGroup], s: &SimilarityMatrix) -> Result<()> {
    for g in groups.iter_mut() {
        let idx = g
            .members
            .iter()
            .map(|m| s.index_of(m).ok_or_else(|| Error::UnknownMeasure(m.clone())))
            .collect::<Result<Vec<_>>>()?;
        let mut best: Option<(f64, &str)> = None;
        for (pos, &i) in idx.iter().enumerate() {
            let mean = if idx.len() == 1 {
                0.0
            } else {
                idx.iter()
                    .filter(|&&j| j != i)
                    .map(|&j| s.values[i][j])
                    .sum::<f64>()
                    / (idx.len() - 1) as f64
            };
            let name = g.members[pos].as_str();
            let better = match best {
                None => true,
                Some((b, bname)) => mean > b || (mean == b && name < bname),
            };
            if better {
                best = Some((mean, name));
            }
        }
        g.representative = best.map(|(_, n)| n.to_string());
    }
    Ok(())
}

/// Cubic reference for `average_linkage`: averages are recomputed from the
/// original matrix at every step.
pub fn average_linkage_naive(s: &SimilarityMatrix) -> Result<Dendrogram> {
    let n = s.len();
    if n == 0 {
        return Err(Error::Argument("empty similarity matrix".into()));
    }
    let mut clusters: Vec<(Vec<usize>, Dendrogram)> = (0..n)
        .map(|i| {
            (vec![i], Dendrogram::Leaf { index: i, name: s.measures[i].clone() })
        })
        .collect();
    let min_name = |c: &[usize]| c.iter().map(|&i| s.measures[i].as_str()).min().unwrap();
    while clusters.len() > 1 {
        let mut best: Option<(f64, (&str, &str), usize, usize)> = None;
        for i in 0..clusters.len() {
            for j in i + 1..clusters.len() {
                let (ci, cj) = (&clusters[i].0, &clusters[j].0);
                let total: f64 = ci.iter().flat_map(|&x| cj.iter().map(move |&y| s.values[x][y])).sum();
                let avg = total / (ci.len() * cj.len()) as f64;
                let (mi, mj) = (min_name(ci), min_name(cj));
                let key = if mi <= mj { (mi, mj) } else { (mj, mi) };
                let better = match &best {
                    None => true,
                    Some((b, bk, _, _)) => avg > *b || (avg == *b && key < *bk),
                };
                if better {
                    best = Some((avg, key, i, j));
                }
            }
        }
        let (similarity, _, i, j) = best.unwrap();
        let (mj, tj) = clusters.remove(j);
        let (mi, ti) = clusters.remove(i);
        let (left, right) = if min_name(&mi) <= min_name(&mj) { (ti, tj) } else { (tj, ti) };
        let mut members = mi;
        members.extend(mj);
        clusters.push((members, Dendrogram::Merge { left: Box::new(left), right: Box::new(right), similarity }));
    }
    Ok(clusters.pop().unwrap().1)
}

/// Cut, annotate and pick representatives in one go.
pub fn group_report(
    s: &SimilarityMatrix,
    table: &ScoredRuleTable,
    theta: f64,
    k: usize,
) -> Result<(Dendrogram, Vec<MeasureGroup>)> {
    let d = average_linkage(s)?;
    let mut groups = cut_at_threshold(&d, theta);
    annotate_groups(&mut groups, table, k)?;
    select_representatives(&mut groups, s)?;
    Ok((d, groups))
}
