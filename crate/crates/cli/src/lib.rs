//! Commands behind the `qam` binary. Each writes its human-readable output
//! to the given writer and its artifacts under the workspace directory.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use qam::catalog::{ingest_catalog, CatalogFormat, CsvMapping, IngestReport};
use qam::config::Config;
use qam::evaluation::{
    build_report, evaluate, generate_synthetic_corpus, load_queries, read_jsonl, write_jsonl,
    DeterministicJudge, EvalQuery, Judgment, MetricReport,
};
use qam::lexical::InvertedIndex;
use qam::pipeline::RunRecord;
use qam::semantic::{HashingEmbedder, VectorIndex};
use qam::text::TokenizerConfig;
use qam::{Catalog, SearchEngine, StrategyId};
use serde::Serialize;

pub const CONFIG_FILE: &str = "qam.toml";
const LOCK_FILE: &str = "index.lock";

/// Artifact locations inside a workspace directory.
#[derive(Clone, Debug)]
pub struct Workspace {
    root: PathBuf,
}

impl Workspace {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Workspace { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn catalog(&self) -> PathBuf {
        self.root.join("catalog.json")
    }

    pub fn lexical(&self) -> PathBuf {
        self.root.join("lexical.json")
    }

    pub fn vectors(&self) -> PathBuf {
        self.root.join("vectors.json")
    }

    pub fn eval_dir(&self) -> PathBuf {
        self.root.join("eval")
    }

    fn ensure(&self) -> Result<()> {
        fs::create_dir_all(&self.root)
            .with_context(|| format!("cannot create workspace {}", self.root.display()))
    }

    /// Explicit `--config` wins, then `qam.toml` in the workspace, then defaults.
    pub fn config(&self, explicit: Option<&Path>, seed: Option<u64>) -> Result<Config> {
        let local = self.root.join(CONFIG_FILE);
        let mut cfg = match explicit {
            Some(p) => Config::load(p)?,
            None if local.is_file() => Config::load(&local)?,
            None => Config::default(),
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        Ok(cfg)
    }

    /// Opens the persisted catalog and indexes as a search engine.
    pub fn engine(&self, cfg: &Config) -> Result<SearchEngine> {
        let catalog = load_catalog(self)?;
        for path in [self.lexical(), self.vectors()] {
            if !path.is_file() {
                bail!("{} not found; run `qam index` first", path.display());
            }
        }
        let lexical = InvertedIndex::load(&self.lexical())?;
        let vectors = VectorIndex::load(&self.vectors())?;
        let provider = HashingEmbedder::new(cfg.embedding_dim, cfg.embedding_seed)?;
        let engine = SearchEngine::new(
            catalog,
            lexical,
            vectors,
            Box::new(provider),
            Box::new(cfg.scorer()),
            cfg.policy(),
            cfg.into(),
        )
        .context("indexes do not match the catalog; run `qam index` again")?;
        Ok(engine.with_top_rated_threshold(cfg.top_rated_threshold))
    }
}

fn load_catalog(ws: &Workspace) -> Result<Catalog> {
    let path = ws.catalog();
    if !path.is_file() {
        bail!("{} not found; run `qam ingest` first", path.display());
    }
    Catalog::load(&path).with_context(|| format!("refusing stale or invalid catalog {}", path.display()))
}

/// Exclusive lock held while index files are written.
struct WorkspaceLock(PathBuf);

impl WorkspaceLock {
    fn acquire(ws: &Workspace) -> Result<Self> {
        let path = ws.root().join(LOCK_FILE);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(WorkspaceLock(path))
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => bail!(
                "workspace is locked by another indexing run; remove {} if that run is gone",
                path.display()
            ),
            Err(e) => Err(e).with_context(|| format!("cannot create {}", path.display())),
        }
    }
}

impl Drop for WorkspaceLock {
    fn drop(&mut self) {
        let _ = fs::remove_file(&self.0);
    }
}

// ---------------------------------------------------------------------------
// ingest / index

pub struct IngestArgs<'a> {
    pub catalog: Option<&'a Path>,
    pub format: Option<CatalogFormat>,
    pub mapping: Option<&'a Path>,
}

pub fn cmd_ingest(ws: &Workspace, cfg: &Config, args: IngestArgs, out: &mut dyn Write) -> Result<IngestReport> {
    let path = args
        .catalog
        .or(cfg.catalog_path.as_deref())
        .context("no catalog given; pass --catalog or set catalog_path")?;
    if !path.is_file() {
        bail!("catalog file {} does not exist", path.display());
    }
    let format = args.format.unwrap_or(cfg.catalog_format);
    let mapping = match args.mapping.or(cfg.csv_mapping.as_deref()) {
        Some(p) => Some(CsvMapping::load(p)?),
        None => None,
    };
    let (catalog, report) = ingest_catalog(path, format, mapping.as_ref(), Default::default())
        .with_context(|| format!("cannot ingest {}", path.display()))?;
    ws.ensure()?;
    catalog.save(&ws.catalog())?;
    writeln!(
        out,
        "ingested {} of {} records ({} warnings), catalog version {}",
        report.accepted,
        report.records,
        report.warnings.len(),
        catalog.version()
    )?;
    for w in &report.warnings {
        writeln!(out, "  warning: record {}: {}", w.record, w.reason)?;
    }
    Ok(report)
}

pub fn cmd_index(ws: &Workspace, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    cfg.validate()?;
    let catalog = load_catalog(ws)?;
    let _lock = WorkspaceLock::acquire(ws)?;
    let lexical = InvertedIndex::build(&catalog, &cfg.indexed_fields, cfg.bm25(), TokenizerConfig::default())?;
    let provider = HashingEmbedder::new(cfg.embedding_dim, cfg.embedding_seed)?;
    let vectors = VectorIndex::build(
        &catalog,
        &provider,
        &cfg.embedding_fields,
        cfg.embedding_mode,
        cfg.execution,
    )?;
    lexical.save(&ws.lexical())?;
    vectors.save(&ws.vectors())?;
    writeln!(
        out,
        "indexed {} products ({} terms, {} vectors) at catalog version {}",
        catalog.len(),
        lexical.terms().count(),
        vectors.len(),
        catalog.version()
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// search

pub struct SearchArgs<'a> {
    pub strategy: StrategyId,
    pub query: &'a str,
    pub n: Option<usize>,
    pub explain: bool,
    pub product: Option<&'a str>,
}

pub fn cmd_search(ws: &Workspace, cfg: &Config, args: SearchArgs, out: &mut dyn Write) -> Result<()> {
    let engine = ws.engine(cfg)?;
    let n = args.n.unwrap_or(cfg.result_size);
    let outcome = engine.search(args.strategy, args.query, n)?;
    if outcome.results.is_empty() {
        writeln!(out, "no results")?;
    }
    for r in &outcome.results {
        let title = &engine.catalog().product(&r.product_id)?.title;
        writeln!(out, "{}\t{}\t{:.6}\t{}", r.rank, r.product_id, r.score, title)?;
    }
    if args.explain {
        writeln!(out, "{}", serde_json::to_string_pretty(&outcome.trace)?)?;
    }
    if let Some(id) = args.product {
        writeln!(out, "constraints for {id}:")?;
        let checks = engine.explain_product(args.query, id)?;
        if checks.is_empty() {
            writeln!(out, "  (none extracted)")?;
        }
        for (c, ok) in checks {
            writeln!(out, "  {} {}", if ok { "pass" } else { "FAIL" }, serde_json::to_string(&c)?)?;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// eval / report

pub enum QuerySource<'a> {
    File(&'a Path),
    Synthetic,
}

pub struct EvalArgs<'a> {
    pub strategies: Vec<StrategyId>,
    pub source: QuerySource<'a>,
    pub out_dir: Option<&'a Path>,
}

#[derive(Serialize)]
struct SyntheticManifest {
    format_version: u32,
    seed: u64,
    products: usize,
    queries: usize,
    catalog_version: String,
}

fn runs_dir(dir: &Path) -> PathBuf {
    dir.join("runs")
}

pub fn cmd_eval(ws: &Workspace, cfg: &Config, args: EvalArgs, out: &mut dyn Write) -> Result<MetricReport> {
    if args.strategies.is_empty() {
        bail!("no strategies selected");
    }
    let dir = args.out_dir.map_or_else(|| ws.eval_dir(), Path::to_path_buf);
    let (engine, queries) = match args.source {
        QuerySource::File(path) => {
            let queries = load_queries(path)?;
            if queries.is_empty() {
                bail!("query file {} is empty", path.display());
            }
            (ws.engine(cfg)?, queries)
        }
        QuerySource::Synthetic => {
            let corpus = generate_synthetic_corpus(
                cfg.seed,
                cfg.synthetic_products,
                cfg.synthetic_queries,
                &cfg.policy(),
            )?;
            fs::create_dir_all(&dir)?;
            corpus.catalog.save(&dir.join("synthetic_catalog.json"))?;
            let manifest = SyntheticManifest {
                format_version: 1,
                seed: cfg.seed,
                products: cfg.synthetic_products,
                queries: cfg.synthetic_queries,
                catalog_version: corpus.catalog.version().to_string(),
            };
            fs::write(dir.join("synthetic.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
            (SearchEngine::build(corpus.catalog, cfg)?, corpus.queries)
        }
    };
    let judge = DeterministicJudge {
        policy: cfg.policy(),
        min_overlap: cfg.judge_min_overlap,
    };
    let depth = cfg.k_set.iter().copied().max().unwrap_or(cfg.result_size).max(cfg.result_size);
    let eval = evaluate(&engine, &args.strategies, &queries, &judge, &cfg.k_set, depth)?;

    let runs = runs_dir(&dir);
    fs::create_dir_all(&runs)?;
    for s in &args.strategies {
        let mine: Vec<&RunRecord> = eval.runs.iter().filter(|r| r.strategy == *s).collect();
        write_jsonl(&runs.join(format!("{}.jsonl", s.as_str())), &mine)?;
    }
    write_jsonl(&dir.join("judgments.jsonl"), &eval.judgments)?;
    write_jsonl(&dir.join("queries.jsonl"), &queries)?;
    write_report(&dir, &eval.report)?;
    writeln!(out, "{}", eval.report.table())?;
    writeln!(out, "artifacts written to {}", dir.display())?;
    Ok(eval.report)
}

fn write_report(dir: &Path, report: &MetricReport) -> Result<()> {
    fs::write(dir.join("report.json"), serde_json::to_string_pretty(report)? + "\n")?;
    fs::write(dir.join("report.txt"), report.table())?;
    Ok(())
}

/// Recomputes the report from the files an eval run left in `dir`.
pub fn cmd_report(cfg: &Config, dir: &Path, json: bool, out: &mut dyn Write) -> Result<MetricReport> {
    let runs_path = runs_dir(dir);
    let mut files: Vec<PathBuf> = fs::read_dir(&runs_path)
        .with_context(|| format!("cannot read {}", runs_path.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
        .collect();
    files.sort();
    let mut runs: Vec<RunRecord> = Vec::new();
    for f in &files {
        runs.extend(read_jsonl::<RunRecord>(f)?);
    }
    let judgments: Vec<Judgment> = read_jsonl(&dir.join("judgments.jsonl"))?;
    let queries: Vec<EvalQuery> = load_queries(&dir.join("queries.jsonl"))?;
    if queries.is_empty() {
        bail!("no queries in {}", dir.display());
    }
    let ground_truth: BTreeMap<String, usize> = queries
        .iter()
        .filter_map(|q| q.relevant.as_ref().map(|r| (q.id.clone(), r.len())))
        .collect();
    let ids: Vec<String> = queries.iter().map(|q| q.id.clone()).collect();
    let report = build_report(&runs, &judgments, &ground_truth, &ids, &cfg.k_set)?;
    if json {
        writeln!(out, "{}", serde_json::to_string_pretty(&report)?)?;
    } else {
        write!(out, "{}", report.table())?;
    }
    Ok(report)
}

/// Parses a comma-separated strategy list; `all` selects every strategy.
pub fn parse_strategies(list: &str) -> Result<Vec<StrategyId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for name in list.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if name == "all" {
            return Ok(StrategyId::ALL.to_vec());
        }
        let s: StrategyId = name.parse()?;
        if seen.insert(s) {
            out.push(s);
        }
    }
    if out.is_empty() {
        bail!("no strategies given");
    }
    Ok(out)
}
