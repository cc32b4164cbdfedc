use std::collections::BTreeSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use rulerank_core::clusterlab::DEFAULT_THETA;
use rulerank_core::corpus::{Scenario, SynthConfig};
use rulerank_core::rankcorr::{Aggregation, Method, DEFAULT_OVERLAP_K};

use crate::commands::{
    compare, mine_score, prepare, synth, CompareArgs, CompareSummary, MineScoreArgs, PrepareArgs,
    SynthArgs, TRANSACTIONS_FILE, SCORED_CSV,
};
use crate::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetChoice {
    Labels(Vec<String>),
    Top(usize),
}

/// Every parameter of a pipeline run. Relative paths resolve against the
/// manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scenario: Scenario,
    #[serde(default)]
    pub epsilon: Option<u32>,
    pub targets: TargetChoice,
    #[serde(default = "default_methods")]
    pub methods: Vec<String>,
    #[serde(default = "default_k")]
    pub k: usize,
    #[serde(default = "default_theta")]
    pub theta: f64,
    #[serde(default = "default_aggregation")]
    pub aggregation: String,
    /// Generate the raw corpus instead of reading `sales`.
    #[serde(default)]
    pub synth: Option<SynthConfig>,
    #[serde(default)]
    pub sales: Option<PathBuf>,
    #[serde(default)]
    pub customers: Option<PathBuf>,
    #[serde(default)]
    pub taxonomy: Option<PathBuf>,
    pub out: PathBuf,
}

fn default_methods() -> Vec<String> {
    vec!["ndcc".into()]
}

fn default_k() -> usize {
    DEFAULT_OVERLAP_K
}

fn default_theta() -> f64 {
    DEFAULT_THETA
}

fn default_aggregation() -> String {
    Aggregation::PerTarget.as_str().into()
}

impl RunConfig {
    pub fn validate(&self) -> CliResult<()> {
        if self.epsilon == Some(0) {
            return Err(CliError::Usage("epsilon must be at least 1".into()));
        }
        if let TargetChoice::Top(0) = self.targets {
            return Err(CliError::Usage("targets.top must be at least 1".into()));
        }
        if self.k == 0 {
            return Err(CliError::Usage("k must be at least 1".into()));
        }
        if self.synth.is_some() == self.sales.is_some() {
            return Err(CliError::Usage("give exactly one of `synth` and `sales`".into()));
        }
        let paths: Vec<&PathBuf> = [&self.sales, &self.customers, &self.taxonomy]
            .into_iter()
            .flatten()
            .chain([&self.out])
            .collect();
        if paths.iter().collect::<BTreeSet<_>>().len() != paths.len() {
            return Err(CliError::Usage("manifest paths must be distinct".into()));
        }
        for m in &self.methods {
            m.parse::<Method>()?;
        }
        self.aggregation.parse::<Aggregation>()?;
        Ok(())
    }

    /// Run the whole pipeline below `out`: raw/, prepared/, scored/, compare/.
    pub fn run(&self, base: &Path) -> CliResult<CompareSummary> {
        self.validate()?;
        let at = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let out = at(&self.out);
        let (sales, customers, taxonomy) = match &self.synth {
            Some(cfg) => {
                let raw = out.join("raw");
                synth(&SynthArgs {
                    seed: cfg.seed,
                    customers: cfg.n_customers,
                    products: cfg.n_products,
                    receipts: cfg.n_receipts,
                    skew: cfg.skew,
                    out: raw.clone(),
                })?;
                (raw.join("sales.csv"), Some(raw.join("customers.csv")), Some(raw.join("taxonomy.csv")))
            }
            None => (
                at(self.sales.as_deref().unwrap()),
                self.customers.as_deref().map(at),
                self.taxonomy.as_deref().map(at),
            ),
        };
        let prepared = out.join("prepared");
        let summary = prepare(&PrepareArgs {
            sales,
            customers,
            taxonomy,
            scenario: self.scenario,
            out: prepared.clone(),
        })?;
        log::info!("prepared {} transactions", summary.transactions);
        let scored = out.join("scored");
        let (targets, top_targets) = match &self.targets {
            TargetChoice::Labels(l) => (l.clone(), None),
            TargetChoice::Top(n) => (Vec::new(), Some(*n)),
        };
        mine_score(&MineScoreArgs {
            transactions: prepared.join(TRANSACTIONS_FILE),
            dictionary: None,
            scenario: Some(self.scenario),
            epsilon: self.epsilon,
            targets,
            top_targets,
            out: scored.clone(),
        })?;
        let result = compare(&CompareArgs {
            scored: scored.join(SCORED_CSV),
            method: self.methods.iter().map(|m| m.parse()).collect::<Result<_, _>>()?,
            aggregation: self.aggregation.parse()?,
            k: Some(self.k),
            theta: self.theta,
            out: out.join("compare"),
        })?;
        let manifest = out.join("manifest.json");
        let mut f = fs::File::create(&manifest).map_err(|e| CliError::Data(format!("{}: {e}", manifest.display())))?;
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        writeln!(f, "{text}").map_err(|e| CliError::Data(format!("{}: {e}", manifest.display())))?;
        Ok(result)
    }
}

pub fn run_manifest(path: &Path) -> CliResult<CompareSummary> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    let config: RunConfig = serde_json::from_str(&text)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let summary = config.run(base)?;
    println!("{summary}");
    Ok(summary)
}
