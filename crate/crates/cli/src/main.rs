use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use qam::catalog::CatalogFormat;
use qam::{Execution, StrategyId};
use qam_cli::{
    cmd_eval, cmd_index, cmd_ingest, cmd_report, cmd_search, parse_strategies, EvalArgs, IngestArgs,
    QuerySource, SearchArgs, Workspace,
};

/// Hybrid product search with query attribute modeling.
#[derive(Parser, Debug)]
#[command(name = "qam", version)]
struct Cli {
    /// Workspace directory for all artifacts.
    #[arg(long, global = true, env = "QAM_WORKSPACE", default_value = ".qam")]
    workspace: PathBuf,
    /// TOML config file (defaults to <workspace>/qam.toml when present).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed (synthetic corpus generation).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Run single-threaded.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Load and validate a catalog file into the workspace.
    Ingest {
        #[arg(long)]
        catalog: Option<PathBuf>,
        /// jsonl or csv
        #[arg(long, value_parser = |s: &str| s.parse::<CatalogFormat>().map_err(|e| e.to_string()))]
        format: Option<CatalogFormat>,
        /// key=column mapping for CSV input
        #[arg(long)]
        mapping: Option<PathBuf>,
    },
    /// Build the lexical and vector indexes for the ingested catalog.
    Index,
    /// Run one query with one strategy.
    Search {
        /// keyword, semantic, rerank, hybrid or qam
        #[arg(long, short, default_value = "qam", value_parser = |s: &str| s.parse::<StrategyId>().map_err(|e| e.to_string()))]
        strategy: StrategyId,
        #[arg(long, short)]
        query: String,
        #[arg(short)]
        n: Option<usize>,
        /// Print the pipeline trace.
        #[arg(long)]
        explain: bool,
        /// Show per-constraint pass/fail for this product id.
        #[arg(long)]
        product: Option<String>,
        /// Search the whole catalog when the qam filter matches nothing.
        #[arg(long)]
        fallback: bool,
    },
    /// Evaluate strategies and write run files plus a report.
    Eval {
        /// Comma-separated strategy names, or `all`.
        #[arg(long, default_value = "all")]
        strategies: String,
        /// JSONL query file: {"id", "text", "relevant"?}
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        queries: Option<PathBuf>,
        /// Use the seed-fixed synthetic corpus instead of the workspace catalog.
        #[arg(long)]
        synthetic: bool,
        /// Output directory (defaults to <workspace>/eval).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Recompute the metric report from an eval directory.
    Report {
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<()> {
    let ws = Workspace::new(&cli.workspace);
    let mut cfg = ws.config(cli.config.as_deref(), cli.seed)?;
    if cli.sequential {
        cfg.execution = Execution::Sequential;
    }
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.command {
        Command::Ingest { catalog, format, mapping } => {
            let args = IngestArgs {
                catalog: catalog.as_deref(),
                format,
                mapping: mapping.as_deref(),
            };
            cmd_ingest(&ws, &cfg, args, &mut out)?;
        }
        Command::Index => cmd_index(&ws, &cfg, &mut out)?,
        Command::Search { strategy, query, n, explain, product, fallback } => {
            cfg.fallback_unfiltered |= fallback;
            let args = SearchArgs {
                strategy,
                query: &query,
                n,
                explain,
                product: product.as_deref(),
            };
            cmd_search(&ws, &cfg, args, &mut out)?;
        }
        Command::Eval { strategies, queries, synthetic, out: dir } => {
            // clap guarantees exactly one of --queries / --synthetic
            let _ = synthetic;
            let source = match &queries {
                Some(p) => QuerySource::File(p),
                None => QuerySource::Synthetic,
            };
            let args = EvalArgs {
                strategies: parse_strategies(&strategies)?,
                source,
                out_dir: dir.as_deref(),
            };
            cmd_eval(&ws, &cfg, args, &mut out)?;
        }
        Command::Report { dir, json } => {
            let dir = dir.unwrap_or_else(|| ws.eval_dir());
            cmd_report(&cfg, &dir, json, &mut out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
