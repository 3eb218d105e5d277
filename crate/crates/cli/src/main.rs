//! `jsvuln`: mine JavaScript vulnerability advisories into a function-level
//! dataset and evaluate classifiers on it.

mod manifest;
mod pipeline;
mod stages;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use jsvuln_core::advisory::AdvisorySource;
use jsvuln_core::eval::{EvalConfig, ResamplingSpec};
use jsvuln_core::github::ApiClient;
use jsvuln_core::Algorithm;

#[derive(Parser)]
#[command(name = "jsvuln", version, about)]
struct Cli {
    /// Seed for all stochastic choices.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,
    /// Worker threads for grid search (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    jobs: usize,
    /// Evaluation config JSON (grids, algorithms, aggregation).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse an advisory dump into normalized entries.
    Ingest {
        #[arg(long)]
        source: String,
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "advisories.json")]
        out: PathBuf,
    },
    /// Resolve advisories into fixing-commit sets and combined patches.
    Resolve {
        #[arg(long)]
        advisories: PathBuf,
        /// `live` (GITHUB_TOKEN, on-disk cache) or `fixture`.
        #[arg(long, default_value = "fixture")]
        mode: String,
        /// Fixture directory (fixture mode).
        #[arg(long)]
        fixtures: Option<PathBuf>,
        /// HTTP cache directory (live mode).
        #[arg(long)]
        cache: Option<PathBuf>,
        /// Review decisions to apply inline.
        #[arg(long)]
        decisions: Option<PathBuf>,
        #[arg(long, default_value = "resolutions")]
        out: PathBuf,
    },
    /// Export pending review candidates from stored resolutions.
    ReviewExport {
        #[arg(long)]
        resolutions: PathBuf,
        #[arg(long, default_value = "review_queue.json")]
        out: PathBuf,
    },
    /// Apply review decisions to stored resolutions and refresh patches.
    ReviewImport {
        #[arg(long)]
        resolutions: PathBuf,
        #[arg(long)]
        decisions: PathBuf,
        #[arg(long, default_value = "fixture")]
        mode: String,
        #[arg(long)]
        fixtures: Option<PathBuf>,
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Build the labeled 44-column dataset CSV from resolutions + snapshots.
    BuildDataset {
        #[arg(long)]
        resolutions: PathBuf,
        #[arg(long)]
        snapshots: PathBuf,
        #[arg(long, default_value = "dataset.csv")]
        out: PathBuf,
    },
    /// Per-function metrics of one JavaScript file, as JSON lines.
    Analyze {
        #[arg(long)]
        file: PathBuf,
    },
    /// Grid-search one algorithm under one resampling strategy.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        algo: String,
        #[arg(long, default_value = "none")]
        resample: String,
        #[arg(long)]
        grid: Option<PathBuf>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Grid-search every algorithm under every resampling strategy.
    Sweep {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Random-label sanity check per algorithm.
    RandCheck {
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Label-shuffle seeds (repeatable).
        #[arg(long, num_args = 1..)]
        seeds: Vec<u64>,
    },
    /// Merge sweep and rand-check outcomes into the report CSVs.
    Report {
        #[arg(long, default_value = "results")]
        results: PathBuf,
        #[arg(long, default_value = "results")]
        out: PathBuf,
    },
    /// Run the whole pipeline from a config file, memoized by manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
}

fn init_logging() {
    let mut builder =
        env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"));
    builder
        .format(|buf, record| {
            writeln!(
                buf,
                "level={} stage={} msg={:?}",
                record.level().as_str().to_ascii_lowercase(),
                record.target(),
                record.args().to_string()
            )
        })
        .target(env_logger::Target::Stderr)
        .init();
}

fn load_eval_config(path: Option<&PathBuf>, seed: u64) -> Result<EvalConfig> {
    let mut cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            serde_json::from_str(&text)
                .with_context(|| format!("parsing config {}", p.display()))?
        }
        None => EvalConfig::default(),
    };
    cfg.seed = seed;
    Ok(cfg)
}

fn client_for(mode: &str, fixtures: Option<PathBuf>, cache: Option<PathBuf>) -> Result<ApiClient> {
    match mode {
        "fixture" => {
            let root = fixtures
                .ok_or_else(|| anyhow::anyhow!("config error: fixture mode requires --fixtures"))?;
            Ok(ApiClient::fixture(root))
        }
        "live" => Ok(ApiClient::live(
            std::env::var("GITHUB_TOKEN").ok(),
            cache.unwrap_or_else(|| PathBuf::from("http_cache")),
        )),
        other => anyhow::bail!("config error: unknown mode `{other}`"),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { source, input, out } => {
            let source: AdvisorySource = source
                .parse()
                .map_err(|e| anyhow::anyhow!("config error: {e}"))?;
            stages::ingest_stage(&[(source, input)], &out)?;
        }
        Command::Resolve {
            advisories,
            mode,
            fixtures,
            cache,
            decisions,
            out,
        } => {
            stages::bail_if_missing(&advisories, "advisories file")?;
            let client = client_for(&mode, fixtures, cache)?;
            stages::resolve_stage(&advisories, &client, decisions.as_deref(), &out)?;
        }
        Command::ReviewExport { resolutions, out } => {
            let all = stages::load_resolutions(&resolutions)?;
            let queue = stages::review_queue(&all);
            std::fs::write(&out, serde_json::to_string_pretty(&queue)?)?;
            log::info!(target: "review", "{} pending items -> {}", queue.len(), out.display());
        }
        Command::ReviewImport {
            resolutions,
            decisions,
            mode,
            fixtures,
            cache,
        } => {
            let client = client_for(&mode, fixtures, cache)?;
            stages::review_import_stage(&resolutions, &decisions, &client)?;
        }
        Command::BuildDataset {
            resolutions,
            snapshots,
            out,
        } => {
            stages::bail_if_missing(&resolutions, "resolutions directory")?;
            stages::bail_if_missing(&snapshots, "snapshots directory")?;
            let summary = stages::dataset_stage(&resolutions, &snapshots, &out)?;
            println!("{}", serde_json::to_string(&summary)?);
        }
        Command::Analyze { file } => {
            print!("{}", stages::analyze_file(&file)?);
        }
        Command::Train {
            dataset,
            algo,
            resample,
            grid,
            out,
        } => {
            let algorithm: Algorithm = algo
                .parse()
                .map_err(|e| anyhow::anyhow!("config error: {e}"))?;
            let strategy: ResamplingSpec = resample
                .parse()
                .map_err(|e| anyhow::anyhow!("config error: {e}"))?;
            let eval = load_eval_config(grid.as_ref().or(cli.config.as_ref()), cli.seed)?;
            let outcome =
                stages::train_stage(&dataset, algorithm, &strategy, &eval, cli.seed, &out)?;
            println!(
                "{}",
                serde_json::json!({
                    "algorithm": algorithm.name(),
                    "strategy": strategy.to_string(),
                    "best_params": outcome.best.params,
                    "dev_f": outcome.best.dev.f_measure,
                    "test_f": outcome.best.test.f_measure,
                    "test_precision": outcome.best.test.precision,
                    "test_recall": outcome.best.test.recall,
                })
            );
        }
        Command::Sweep { dataset, out } => {
            let eval = load_eval_config(cli.config.as_ref(), cli.seed)?;
            stages::sweep_stage(&dataset, &eval, None, &out.join("cells.json"))?;
        }
        Command::RandCheck {
            dataset,
            out,
            seeds,
        } => {
            let eval = load_eval_config(cli.config.as_ref(), cli.seed)?;
            let seeds = if seeds.is_empty() {
                vec![cli.seed]
            } else {
                seeds
            };
            stages::rand_stage(&dataset, &eval, &seeds, &out.join("rand_cells.json"))?;
        }
        Command::Report { results, out } => {
            stages::report_stage(
                &results.join("cells.json"),
                Some(&results.join("rand_cells.json")),
                &out,
            )?;
        }
        Command::Run { config } => {
            pipeline::run_pipeline(&config)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    init_logging();
    let cli = Cli::parse();
    if cli.jobs > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.jobs)
            .build_global()
        {
            log::warn!(target: "run", "thread pool already initialized: {e}");
        }
    }
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let text = format!("{err:#}");
            log::error!(target: "run", "{text}");
            if text.contains("config error") {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
