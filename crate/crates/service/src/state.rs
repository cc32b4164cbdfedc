use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::seq::SliceRandom;
use uuid::Uuid;

use rulerank_core::clusterlab::{average_linkage, Dendrogram};
use rulerank_core::corpus::Taxonomy;
use rulerank_core::rankcorr::{correlation_matrix, Aggregation, Method, RankedList, SimilarityMatrix};
use rulerank_core::rules::{Measure, ScoredRuleTable, REVIEW_MEASURES};
use rulerank_core::Result;

pub const SESSION_HEADER: &str = "x-session-id";

/// Measure labels as one analyst sees them.
#[derive(Debug, Clone)]
pub struct Session {
    pub blinded: bool,
    /// (label, measure); blinded sessions map "A".."F" onto the six review
    /// measures in a random order fixed for the session.
    pub labels: Vec<(String, Measure)>,
}

impl Session {
    pub fn open() -> Self {
        Session {
            blinded: false,
            labels: Measure::ALL.iter().map(|m| (m.name().to_string(), *m)).collect(),
        }
    }

    pub fn blinded(rng: &mut impl rand::Rng) -> Self {
        let mut measures = REVIEW_MEASURES.to_vec();
        measures.shuffle(rng);
        Session {
            blinded: true,
            labels: measures
                .into_iter()
                .zip('A'..)
                .map(|(m, c)| (c.to_string(), m))
                .collect(),
        }
    }

    pub fn resolve(&self, label: &str) -> Option<Measure> {
        if self.blinded {
            self.labels
                .iter()
                .find(|(l, _)| l.eq_ignore_ascii_case(label.trim()))
                .map(|(_, m)| *m)
        } else {
            Measure::from_name(label)
        }
    }
}

/// The loaded table with per-target rankings precomputed.
pub struct Dataset {
    table: ScoredRuleTable,
    taxonomy: Option<Taxonomy>,
    targets: Vec<(String, Vec<usize>)>,
    /// rankings[target][measure] holds table row indices, best first.
    rankings: Vec<Vec<Vec<usize>>>,
    same_category: Vec<bool>,
    matrices: Mutex<HashMap<(Method, Aggregation), Arc<SimilarityMatrix>>>,
}

impl Dataset {
    pub fn new(table: ScoredRuleTable, taxonomy: Option<Taxonomy>) -> Self {
        let targets: Vec<(String, Vec<usize>)> = table
            .rows_by_target()
            .into_iter()
            .map(|(t, rows)| (t.to_string(), rows))
            .collect();
        let rankings = targets
            .iter()
            .map(|(_, rows)| {
                Measure::ALL
                    .iter()
                    .map(|&m| {
                        let scores: Vec<f64> = rows.iter().map(|&i| table.rows()[i].score(m)).collect();
                        RankedList::from_scores(&scores)
                            .order()
                            .iter()
                            .map(|&local| rows[local])
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let same_category = table
            .rows()
            .iter()
            .map(|r| match &taxonomy {
                None => false,
                Some(tax) => match tax.parent_of(&r.consequent) {
                    None => false,
                    Some(parent) => r
                        .antecedent
                        .iter()
                        .all(|a| tax.parent_of(a) == Some(parent)),
                },
            })
            .collect();
        Dataset {
            table,
            taxonomy,
            targets,
            rankings,
            same_category,
            matrices: Mutex::new(HashMap::new()),
        }
    }

    pub fn table(&self) -> &ScoredRuleTable {
        &self.table
    }

    pub fn has_taxonomy(&self) -> bool {
        self.taxonomy.is_some()
    }

    pub fn targets(&self) -> impl Iterator<Item = (&str, &[usize])> {
        self.targets.iter().map(|(t, rows)| (t.as_str(), rows.as_slice()))
    }

    /// Row indices of `target`'s rules ordered by `measure`.
    pub fn ranking(&self, target: &str, measure: Measure) -> Option<Vec<usize>> {
        let t = self.targets.iter().position(|(l, _)| l == target)?;
        Some(self.rankings[t][measure.index()].clone())
    }

    /// Every antecedent item shares the target's immediate parent category.
    pub fn same_category(&self, row: usize) -> bool {
        self.same_category[row]
    }

    pub fn matrix(&self, method: Method, aggregation: Aggregation) -> Result<Arc<SimilarityMatrix>> {
        if let Some(m) = self.matrices.lock().unwrap().get(&(method, aggregation)) {
            return Ok(m.clone());
        }
        let m = Arc::new(correlation_matrix(&self.table, method, aggregation)?);
        self.matrices
            .lock()
            .unwrap()
            .insert((method, aggregation), m.clone());
        Ok(m)
    }

    pub fn dendrogram(&self, method: Method, aggregation: Aggregation) -> Result<Dendrogram> {
        average_linkage(&*self.matrix(method, aggregation)?)
    }
}

#[derive(Default)]
pub struct AppState {
    data: OnceLock<Arc<Dataset>>,
    sessions: Mutex<HashMap<Uuid, Session>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn loaded(data: Dataset) -> Self {
        let s = Self::new();
        s.load(data);
        s
    }

    /// Install the dataset. Later calls are ignored.
    pub fn load(&self, data: Dataset) {
        if self.data.set(Arc::new(data)).is_err() {
            log::warn!("dataset already loaded; ignoring reload");
        }
    }

    pub fn dataset(&self) -> Option<Arc<Dataset>> {
        self.data.get().cloned()
    }

    pub fn create_session(&self, blinded: bool) -> Uuid {
        let session = if blinded {
            Session::blinded(&mut rand::rng())
        } else {
            Session::open()
        };
        let id = Uuid::new_v4();
        self.sessions.lock().unwrap().insert(id, session);
        id
    }

    pub fn session(&self, id: Uuid) -> Option<Session> {
        self.sessions.lock().unwrap().get(&id).cloned()
    }
}
