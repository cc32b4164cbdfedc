use std::collections::HashSet;
use std::fmt;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::Args;

use rulerank_core::clusterlab::{group_report, top_k_profile, DEFAULT_THETA, DEFAULT_TOP_K};
use rulerank_core::corpus::{
    build_transactions, dedup_records, parse_customers, parse_sales, synth_corpus, ItemDictionary, ItemKind,
    Scenario, SynthConfig, Taxonomy, TransactionSet,
};
use rulerank_core::miner::TargetSet;
use rulerank_core::pipeline::{mine_and_score, resolve_targets, TargetSpec};
use rulerank_core::rankcorr::{correlation_matrix, Aggregation, Method, DEFAULT_OVERLAP_K};
use rulerank_core::rules::{Measure, ScoredRuleTable};
use rulerank_service::{router, AppState, Dataset};

use crate::{CliError, CliResult};

pub const TRANSACTIONS_FILE: &str = "transactions.txt";
pub const DICTIONARY_FILE: &str = "dictionary.tsv";
pub const PREPARE_META_FILE: &str = "prepare.json";
pub const SCORED_CSV: &str = "scored.csv";
pub const SCORED_JSONL: &str = "scored.jsonl";

fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| io_err(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> CliResult<()>) -> CliResult<()> {
    let mut w = create(path)?;
    f(&mut w)?;
    w.flush().map_err(|e| io_err(path, e))
}

fn parse_flag<T: std::str::FromStr<Err = rulerank_core::Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: rulerank_core::Error| e.to_string())
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 5_000)]
    pub customers: usize,
    #[arg(long, default_value_t = 2_000)]
    pub products: usize,
    #[arg(long, default_value_t = 100_000)]
    pub receipts: usize,
    /// Zipf exponent of product popularity.
    #[arg(long, default_value_t = 1.1)]
    pub skew: f64,
    #[arg(long)]
    pub out: PathBuf,
}

impl SynthArgs {
    pub fn config(&self) -> SynthConfig {
        SynthConfig {
            seed: self.seed,
            n_customers: self.customers,
            n_products: self.products,
            n_receipts: self.receipts,
            skew: self.skew,
        }
    }
}

/// Writes sales.csv, customers.csv and taxonomy.csv into `out`.
pub fn synth(args: &SynthArgs) -> CliResult<PathBuf> {
    let corpus = synth_corpus(&args.config())?;
    corpus.write_to(&args.out).map_err(|e| io_err(&args.out, e))?;
    log::info!("{} sales records written to {}", corpus.records.len(), args.out.display());
    Ok(args.out.clone())
}

#[derive(Debug, Clone, Args)]
pub struct PrepareArgs {
    #[arg(long)]
    pub sales: PathBuf,
    /// Customer profiles; required for DEMO.
    #[arg(long)]
    pub customers: Option<PathBuf>,
    /// Product taxonomy; required for DEMO.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long, value_parser = parse_flag::<Scenario>)]
    pub scenario: Scenario,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct PrepareSummary {
    pub scenario: Scenario,
    /// Sales records read, after dropping exact duplicates.
    pub records: usize,
    /// Distinct customers in the sales file.
    pub customers: usize,
    pub transactions: usize,
    pub items: usize,
    pub demographics: usize,
    pub categories: usize,
}

impl fmt::Display for PrepareSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "scenario: {}\nsales records: {}\ncustomers: {}\ntransactions: {}\nitems: {}",
            self.scenario, self.records, self.customers, self.transactions, self.items
        )?;
        if self.scenario == Scenario::Demo {
            write!(f, "\ndemographic items: {}\ncategory items: {}", self.demographics, self.categories)?;
        }
        Ok(())
    }
}

pub fn prepare(args: &PrepareArgs) -> CliResult<PrepareSummary> {
    let records = parse_sales(&args.sales)?;
    let profiles = args.customers.as_ref().map(parse_customers).transpose()?;
    let taxonomy = args
        .taxonomy
        .as_ref()
        .map(Taxonomy::parse)
        .transpose()?;
    if args.scenario == Scenario::Demo {
        if profiles.is_none() {
            return Err(CliError::Usage("DEMO needs --customers (customer profiles file)".into()));
        }
        if taxonomy.is_none() {
            return Err(CliError::Usage("DEMO needs --taxonomy (product taxonomy file)".into()));
        }
    }
    let ts = build_transactions(&records, args.scenario, profiles.as_deref(), taxonomy.as_ref())?;
    let count = |k| (0..ts.dictionary().len() as u32).filter(|&i| ts.dictionary().kind(i) == Some(k)).count();
    let records = dedup_records(records);
    let customers = records.iter().map(|r| r.customer_id.as_str()).collect::<HashSet<_>>().len();
    let summary = PrepareSummary {
        scenario: ts.scenario(),
        records: records.len(),
        customers,
        transactions: ts.len(),
        items: ts.dictionary().len(),
        demographics: count(ItemKind::Demographic),
        categories: count(ItemKind::Category),
    };
    let tx_path = args.out.join(TRANSACTIONS_FILE);
    write_with(&tx_path, |w| ts.write_transactions(w).map_err(|e| io_err(&tx_path, e)))?;
    let dict_path = args.out.join(DICTIONARY_FILE);
    write_with(&dict_path, |w| ts.dictionary().write(w).map_err(|e| io_err(&dict_path, e)))?;
    let meta_path = args.out.join(PREPARE_META_FILE);
    write_with(&meta_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &summary).map_err(|e| io_err(&meta_path, e))?;
        writeln!(w).map_err(|e| io_err(&meta_path, e))
    })?;
    Ok(summary)
}

#[derive(Debug, Clone, Args)]
pub struct MineScoreArgs {
    #[arg(long)]
    pub transactions: PathBuf,
    /// Defaults to dictionary.tsv next to the transactions file.
    #[arg(long)]
    pub dictionary: Option<PathBuf>,
    /// Defaults to the scenario recorded by `prepare`.
    #[arg(long, value_parser = parse_flag::<Scenario>)]
    pub scenario: Option<Scenario>,
    /// Minimum support; defaults to the scenario's default.
    #[arg(long)]
    pub epsilon: Option<u32>,
    /// Comma-separated target labels.
    #[arg(long, value_delimiter = ',', conflicts_with = "top_targets")]
    pub targets: Vec<String>,
    /// Use the N most frequent eligible items as targets.
    #[arg(long)]
    pub top_targets: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn mine_score(args: &MineScoreArgs) -> CliResult<usize> {
    let dir = args.transactions.parent().unwrap_or(Path::new("."));
    let dict_path = args.dictionary.clone().unwrap_or_else(|| dir.join(DICTIONARY_FILE));
    let scenario = match args.scenario {
        Some(s) => s,
        None => {
            let meta = dir.join(PREPARE_META_FILE);
            let summary: PrepareSummary = serde_json::from_reader(open(&meta).map_err(|_| {
                CliError::Usage(format!("--scenario not given and {} not found", meta.display()))
            })?)
            .map_err(|e| io_err(&meta, e))?;
            summary.scenario
        }
    };
    let dictionary = ItemDictionary::read(open(&dict_path)?, &dict_path.display().to_string())?;
    let ts = TransactionSet::read_transactions(
        open(&args.transactions)?,
        &args.transactions.display().to_string(),
        scenario,
        dictionary,
    )?;
    let spec = match (args.top_targets, args.targets.is_empty()) {
        (Some(n), true) => TargetSpec::TopN(n),
        (None, false) => TargetSpec::Labels(args.targets.clone()),
        (None, true) => return Err(CliError::Usage("give --targets or --top-targets".into())),
        (Some(_), false) => return Err(CliError::Usage("--targets and --top-targets are exclusive".into())),
    };
    let ids = resolve_targets(&ts, &spec)?;
    let epsilon = args.epsilon.unwrap_or_else(|| scenario.default_min_support());
    let table = mine_and_score(&ts, &TargetSet::new(ids, epsilon)?)?;
    if table.is_empty() {
        log::warn!("no rule reaches support {epsilon}; writing an empty table");
    }
    let csv_path = args.out.join(SCORED_CSV);
    write_with(&csv_path, |w| Ok(table.write_csv(w)?))?;
    let jsonl_path = args.out.join(SCORED_JSONL);
    write_with(&jsonl_path, |w| Ok(table.write_jsonl(w)?))?;
    Ok(table.len())
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    /// Scored rule CSV written by mine-score.
    #[arg(long)]
    pub scored: PathBuf,
    /// Comma-separated: spearman, kendall, overlap[@k], ndcc.
    #[arg(long, value_delimiter = ',', default_value = "ndcc", value_parser = parse_flag::<Method>)]
    pub method: Vec<Method>,
    #[arg(long, default_value = "per-target-averaged", value_parser = parse_flag::<Aggregation>)]
    pub aggregation: Aggregation,
    /// Depth for overlap@k when the method does not name one.
    #[arg(long)]
    pub k: Option<usize>,
    /// Similarity at or above which subtrees form one group.
    #[arg(long, default_value_t = DEFAULT_THETA)]
    pub theta: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone)]
pub struct CompareSummary {
    pub rules: usize,
    pub targets: usize,
    /// (method, number of groups, representatives)
    pub methods: Vec<(String, usize, Vec<String>)>,
}

impl fmt::Display for CompareSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "rules: {}\ntargets: {}", self.rules, self.targets)?;
        for (m, groups, reps) in &self.methods {
            write!(f, "\n{m}: {groups} groups; representatives: {}", reps.join(", "))?;
        }
        Ok(())
    }
}

fn file_tag(m: Method) -> String {
    m.to_string().replace('@', "-")
}

pub fn compare(args: &CompareArgs) -> CliResult<CompareSummary> {
    if !(-1.0..=1.0).contains(&args.theta) {
        return Err(CliError::Usage(format!("--theta must lie in [-1, 1], got {}", args.theta)));
    }
    if args.k == Some(0) {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    if args.method.is_empty() {
        return Err(CliError::Usage("no --method given".into()));
    }
    let table = ScoredRuleTable::read_csv(open(&args.scored)?, &args.scored.display().to_string())?;
    let profile_path = args.out.join(format!("profile-top{DEFAULT_TOP_K}.csv"));
    write_with(&profile_path, |w| {
        let io = |e| io_err(&profile_path, e);
        writeln!(w, "measure,group,mean_top_recall,mean_top_confidence").map_err(io)?;
        for m in Measure::ALL {
            if let Some((r, c)) = top_k_profile(&table, m, DEFAULT_TOP_K) {
                writeln!(w, "\"{}\",{},{r},{c}", m.name(), m.group().as_str()).map_err(io)?;
            }
        }
        Ok(())
    })?;
    let mut summary = CompareSummary {
        rules: table.len(),
        targets: table.targets().len(),
        methods: Vec::new(),
    };
    for &method in &args.method {
        let method = match (method, args.k) {
            (Method::Overlap { k }, Some(flag)) if k == DEFAULT_OVERLAP_K => method.with_k(flag),
            _ => method,
        };
        let tag = file_tag(method);
        let matrix = correlation_matrix(&table, method, args.aggregation)?;
        let (dendrogram, groups) = group_report(&matrix, &table, args.theta, DEFAULT_TOP_K)?;

        let p = args.out.join(format!("matrix-{tag}.json"));
        write_with(&p, |w| {
            serde_json::to_writer(&mut *w, &matrix.to_json()).map_err(|e| io_err(&p, e))?;
            writeln!(w).map_err(|e| io_err(&p, e))
        })?;
        let p = args.out.join(format!("matrix-{tag}.csv"));
        write_with(&p, |w| Ok(matrix.write_csv(w)?))?;
        let p = args.out.join(format!("dendrogram-{tag}.json"));
        write_with(&p, |w| {
            serde_json::to_writer(&mut *w, &dendrogram.to_json()).map_err(|e| io_err(&p, e))?;
            writeln!(w).map_err(|e| io_err(&p, e))
        })?;
        let p = args.out.join(format!("dendrogram-{tag}.dot"));
        write_with(&p, |w| w.write_all(dendrogram.to_dot().as_bytes()).map_err(|e| io_err(&p, e)))?;
        let p = args.out.join(format!("groups-{tag}.json"));
        write_with(&p, |w| {
            serde_json::to_writer_pretty(&mut *w, &groups).map_err(|e| io_err(&p, e))?;
            writeln!(w).map_err(|e| io_err(&p, e))
        })?;
        let p = args.out.join(format!("groups-{tag}.csv"));
        write_with(&p, |w| {
            let io = |e| io_err(&p, e);
            writeln!(w, "label,representative,mean_top_recall,mean_top_confidence,reference_groups,members").map_err(io)?;
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            for g in &groups {
                writeln!(
                    w,
                    "{},\"{}\",{},{},{},\"{}\"",
                    g.label,
                    g.representative.as_deref().unwrap_or(""),
                    opt(g.mean_top_recall),
                    opt(g.mean_top_confidence),
                    g.reference_groups.join(" "),
                    g.members.join("; ")
                )
                .map_err(io)?;
            }
            Ok(())
        })?;
        summary.methods.push((
            method.to_string(),
            groups.len(),
            groups.iter().filter_map(|g| g.representative.clone()).collect(),
        ));
    }
    Ok(summary)
}

#[derive(Debug, Clone, Args)]
pub struct ServeArgs {
    #[arg(long)]
    pub scored: PathBuf,
    /// Enables the same-category filter.
    #[arg(long)]
    pub taxonomy: Option<PathBuf>,
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: SocketAddr,
}

/// Bind, then load the table in the background; requests get 503 until
/// loading finishes.
pub fn serve(args: &ServeArgs) -> CliResult<()> {
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let state = Arc::new(AppState::new());
    let loader_state = state.clone();
    let (scored, taxonomy) = (args.scored.clone(), args.taxonomy.clone());
    let addr = args.addr;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(addr)
            .await
            .map_err(|e| CliError::Usage(format!("cannot bind {addr}: {e}")))?;
        eprintln!("listening on http://{addr}");
        let loader = tokio::task::spawn_blocking(move || -> CliResult<()> {
            let table = ScoredRuleTable::read_csv(open(&scored)?, &scored.display().to_string())?;
            let tax = taxonomy.as_ref().map(Taxonomy::parse).transpose()?;
            loader_state.load(Dataset::new(table, tax));
            Ok(())
        });
        tokio::spawn(async move {
            match loader.await {
                Ok(Ok(())) => eprintln!("data loaded"),
                Ok(Err(e)) => {
                    eprintln!("error: {e}");
                    std::process::exit(e.exit_code().into());
                }
                Err(e) => {
                    eprintln!("error: loader failed: {e}");
                    std::process::exit(2);
                }
            }
        });
        axum::serve(listener, router(state))
            .await
            .map_err(|e| CliError::Data(e.to_string()))
    })
}
