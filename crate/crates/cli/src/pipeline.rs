//! The `run` subcommand: full pipeline with manifest-based memoization.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use jsvuln_core::advisory::AdvisorySource;
use jsvuln_core::eval::EvalConfig;
use jsvuln_core::github::ApiClient;

use crate::manifest::{hex_digest, Manifest, TOOL_VERSION};
use crate::stages;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IngestInput {
    pub source: String,
    pub input: PathBuf,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResolveSection {
    /// `live` or `fixture`.
    pub mode: String,
    #[serde(default)]
    pub fixtures: Option<PathBuf>,
    #[serde(default)]
    pub cache: Option<PathBuf>,
    #[serde(default)]
    pub decisions: Option<PathBuf>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalSection {
    #[serde(flatten)]
    pub config: EvalConfig,
    /// Strategy list like `["none", "over:0.5"]`; omitted = all nine.
    #[serde(default)]
    pub strategies: Option<Vec<String>>,
    /// Run the random-label sanity column.
    #[serde(default = "default_true")]
    pub rand_check: bool,
    #[serde(default)]
    pub rand_seeds: Option<Vec<u64>>,
}

fn default_true() -> bool {
    true
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            config: EvalConfig::default(),
            strategies: None,
            rand_check: true,
            rand_seeds: None,
        }
    }
}

/// The `run --config` document. Relative paths resolve against the config
/// file's directory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    #[serde(default)]
    pub seed: Option<u64>,
    pub ingest: Vec<IngestInput>,
    pub resolve: ResolveSection,
    pub snapshots: PathBuf,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub eval: EvalSection,
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<(Self, PathBuf)> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg: PipelineConfig = serde_json::from_str(&text)
            .with_context(|| format!("parsing config {}", path.display()))?;
        let base = path
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let anchor = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&p);
            }
        };
        for i in &mut cfg.ingest {
            anchor(&mut i.input);
        }
        if let Some(f) = &mut cfg.resolve.fixtures {
            anchor(f);
        }
        if let Some(c) = &mut cfg.resolve.cache {
            anchor(c);
        }
        if let Some(d) = &mut cfg.resolve.decisions {
            anchor(d);
        }
        anchor(&mut cfg.snapshots);
        anchor(&mut cfg.out_dir);
        cfg.validate()?;
        if let Some(seed) = cfg.seed {
            cfg.eval.config.seed = seed;
        }
        Ok((cfg, base))
    }

    fn validate(&self) -> Result<()> {
        if self.ingest.is_empty() {
            bail!("config error: `ingest` must list at least one dump");
        }
        for i in &self.ingest {
            i.source
                .parse::<AdvisorySource>()
                .map_err(|e| anyhow::anyhow!("config error: {e}"))?;
        }
        match self.resolve.mode.as_str() {
            "fixture" => {
                if self.resolve.fixtures.is_none() {
                    bail!("config error: fixture mode requires `resolve.fixtures`");
                }
            }
            "live" => {}
            other => bail!("config error: unknown resolve mode `{other}`"),
        }
        stages::validate_strategies(self.eval.strategies.as_deref())
            .map_err(|e| anyhow::anyhow!("config error: {e}"))?;
        Ok(())
    }

    pub fn client(&self) -> ApiClient {
        match self.resolve.mode.as_str() {
            "fixture" => ApiClient::fixture(
                self.resolve
                    .fixtures
                    .clone()
                    .expect("validated fixture dir"),
            ),
            _ => {
                let cache = self
                    .resolve
                    .cache
                    .clone()
                    .unwrap_or_else(|| self.out_dir.join("http_cache"));
                ApiClient::live(std::env::var("GITHUB_TOKEN").ok(), cache)
            }
        }
    }
}

struct StagePlan<'a> {
    name: &'a str,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    config_hash: String,
}

/// Execute the pipeline: ingest -> resolve -> build-dataset -> sweep
/// (-> rand-check) -> report, skipping stages whose manifest entries are
/// fresh. Any executed stage marks everything downstream stale.
pub fn run_pipeline(config_path: &Path) -> Result<()> {
    let (cfg, _base) = PipelineConfig::load(config_path)?;
    let out = &cfg.out_dir;
    fs::create_dir_all(out)?;
    let manifest_path = out.join("manifest.json");
    let mut manifest = Manifest::load(&manifest_path);

    let advisories_file = out.join("advisories.json");
    let resolutions_dir = out.join("resolutions");
    let dataset_file = out.join("dataset.csv");
    let results_dir = out.join("results");
    let cells_file = results_dir.join("cells.json");
    let rand_file = results_dir.join("rand_cells.json");

    let cfg_json = serde_json::to_string(&cfg)?;
    let stage_hash = |name: &str, extra: &str| {
        hex_digest(format!("{TOOL_VERSION}\0{name}\0{cfg_json}\0{extra}").as_bytes())
    };

    let mut upstream_ran = false;
    let mut run_stage =
        |manifest: &mut Manifest, plan: StagePlan, body: &dyn Fn() -> Result<()>| -> Result<()> {
            let inputs: Vec<&Path> = plan.inputs.iter().map(PathBuf::as_path).collect();
            if !upstream_ran && manifest.is_fresh(plan.name, &inputs, &plan.config_hash) {
                log::info!(target: plan.name, "fresh; skipped");
                return Ok(());
            }
            log::info!(target: plan.name, "running");
            body().with_context(|| format!("stage {} failed", plan.name))?;
            let outputs: Vec<&Path> = plan.outputs.iter().map(PathBuf::as_path).collect();
            manifest
                .record(plan.name, &inputs, &outputs, &plan.config_hash)
                .with_context(|| format!("recording stage {}", plan.name))?;
            manifest.save(&manifest_path)?;
            upstream_ran = true;
            Ok(())
        };

    // ingest
    let ingest_inputs: Vec<(AdvisorySource, PathBuf)> = cfg
        .ingest
        .iter()
        .map(|i| (i.source.parse().expect("validated"), i.input.clone()))
        .collect();
    run_stage(
        &mut manifest,
        StagePlan {
            name: "ingest",
            inputs: cfg.ingest.iter().map(|i| i.input.clone()).collect(),
            outputs: vec![advisories_file.clone()],
            config_hash: stage_hash("ingest", ""),
        },
        &|| stages::ingest_stage(&ingest_inputs, &advisories_file).map(|_| ()),
    )?;

    // resolve
    let client = cfg.client();
    let mut resolve_inputs = vec![advisories_file.clone()];
    if let Some(d) = &cfg.resolve.decisions {
        resolve_inputs.push(d.clone());
    }
    run_stage(
        &mut manifest,
        StagePlan {
            name: "resolve",
            inputs: resolve_inputs,
            outputs: vec![resolutions_dir.clone()],
            config_hash: stage_hash("resolve", &cfg.resolve.mode),
        },
        &|| {
            stages::resolve_stage(
                &advisories_file,
                &client,
                cfg.resolve.decisions.as_deref(),
                &resolutions_dir,
            )
        },
    )?;

    // build-dataset
    run_stage(
        &mut manifest,
        StagePlan {
            name: "build-dataset",
            inputs: vec![resolutions_dir.clone(), cfg.snapshots.clone()],
            outputs: vec![dataset_file.clone()],
            config_hash: stage_hash("build-dataset", ""),
        },
        &|| stages::dataset_stage(&resolutions_dir, &cfg.snapshots, &dataset_file).map(|_| ()),
    )?;

    // sweep
    run_stage(
        &mut manifest,
        StagePlan {
            name: "sweep",
            inputs: vec![dataset_file.clone()],
            outputs: vec![cells_file.clone()],
            config_hash: stage_hash("sweep", ""),
        },
        &|| {
            stages::sweep_stage(
                &dataset_file,
                &cfg.eval.config,
                cfg.eval.strategies.as_deref(),
                &cells_file,
            )
            .map(|_| ())
        },
    )?;

    // rand-check
    if cfg.eval.rand_check {
        let seeds = cfg
            .eval
            .rand_seeds
            .clone()
            .unwrap_or_else(|| vec![cfg.eval.config.seed]);
        run_stage(
            &mut manifest,
            StagePlan {
                name: "rand-check",
                inputs: vec![dataset_file.clone()],
                outputs: vec![rand_file.clone()],
                config_hash: stage_hash("rand-check", &format!("{seeds:?}")),
            },
            &|| stages::rand_stage(&dataset_file, &cfg.eval.config, &seeds, &rand_file).map(|_| ()),
        )?;
    }

    // report
    let grid_file = results_dir.join("f_measure_grid.csv");
    let long_file = results_dir.join("results_long.csv");
    let mut report_inputs = vec![cells_file.clone()];
    if cfg.eval.rand_check {
        report_inputs.push(rand_file.clone());
    }
    run_stage(
        &mut manifest,
        StagePlan {
            name: "report",
            inputs: report_inputs,
            outputs: vec![grid_file, long_file],
            config_hash: stage_hash("report", ""),
        },
        &|| {
            stages::report_stage(
                &cells_file,
                cfg.eval.rand_check.then_some(rand_file.as_path()),
                &results_dir,
            )
            .map(|_| ())
        },
    )?;

    log::info!(target: "run", "pipeline complete; outputs under {}", out.display());
    Ok(())
}
