//! Pipeline stage implementations shared by the subcommands and `run`.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use jsvuln_core::advisory::{classify_urls, ingest_advisories, AdvisoryEntry, AdvisorySource};
use jsvuln_core::dataset::{
    analyze_snapshot, emit_dataset, pool_rows, snapshot_rows, DatasetRow, DatasetSummary,
};
use jsvuln_core::eval::{
    grid_search, random_label_check, write_reports, EvalConfig, FoldPlan, ResamplingSpec,
    SearchOutcome, SweepCell,
};
use jsvuln_core::github::{
    apply_review_decisions, fetch_combined_patch, resolve_fixing_commits, sanitize_id, ApiClient,
    FixResolution, ResolutionStatus, ResolveError, ReviewDecision,
};
use jsvuln_core::ml::{mix_seed, FeatureMatrix, StandardLearner};
use jsvuln_core::parse_unified_diff;

/// Ingest one or more dumps into a single advisories.json.
pub fn ingest_stage(inputs: &[(AdvisorySource, PathBuf)], out: &Path) -> Result<usize> {
    let mut entries: Vec<AdvisoryEntry> = Vec::new();
    let mut skipped = 0usize;
    for (source, path) in inputs {
        let outcome = ingest_advisories(path, *source)
            .with_context(|| format!("ingesting {}", path.display()))?;
        log::info!(target: "ingest", "{}: {} entries, {} skipped", path.display(), outcome.entries.len(), outcome.skipped);
        entries.extend(outcome.entries);
        skipped += outcome.skipped;
    }
    if let Some(parent) = out.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(out, serde_json::to_string_pretty(&entries)?)?;
    log::info!(target: "ingest", "wrote {} advisories to {} ({} records skipped)", entries.len(), out.display(), skipped);
    Ok(entries.len())
}

/// One pending review item exported for offline validation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReviewQueueItem {
    pub advisory_id: String,
    pub issue_number: u64,
    pub url: String,
    /// Present when the URL is a commit URL (the decidable case).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub commit_sha: Option<String>,
}

pub fn review_queue(resolutions: &[FixResolution]) -> Vec<ReviewQueueItem> {
    let mut items = Vec::new();
    for res in resolutions {
        for cand in &res.review_candidates {
            let classified = jsvuln_core::classify_url(&cand.url);
            let commit_sha = match classified.kind {
                jsvuln_core::UrlKind::Commit => classified.ref_id,
                _ => None,
            };
            items.push(ReviewQueueItem {
                advisory_id: res.advisory_id.clone(),
                issue_number: cand.issue_number,
                url: cand.url.clone(),
                commit_sha,
            });
        }
    }
    items
}

/// Resolve every advisory into a FixResolution + combined patch on disk.
/// Dead references and missing snapshots degrade per advisory, not the run.
pub fn resolve_stage(
    advisories_file: &Path,
    client: &ApiClient,
    decisions_file: Option<&Path>,
    out_dir: &Path,
) -> Result<()> {
    let text = fs::read_to_string(advisories_file)
        .with_context(|| format!("reading {}", advisories_file.display()))?;
    let advisories: Vec<AdvisoryEntry> = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", advisories_file.display()))?;
    let decisions: Vec<ReviewDecision> = match decisions_file {
        Some(path) => {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => Vec::new(),
    };

    fs::create_dir_all(out_dir)?;
    let mut resolutions = Vec::new();
    for entry in &advisories {
        let urls = classify_urls(entry);
        let mut res = resolve_fixing_commits(entry, &urls, client)
            .with_context(|| format!("resolving {}", entry.id))?;
        let own: Vec<ReviewDecision> = decisions
            .iter()
            .filter(|d| d.advisory_id == entry.id)
            .cloned()
            .collect();
        if !own.is_empty() {
            res = apply_review_decisions(res, &own)
                .with_context(|| format!("applying review decisions for {}", entry.id))?;
        }
        let res = finish_resolution(res, client, out_dir)?;
        resolutions.push(res);
    }

    let queue = review_queue(&resolutions);
    fs::write(
        out_dir.join("review_queue.json"),
        serde_json::to_string_pretty(&queue)?,
    )?;
    for res in &resolutions {
        let stem = sanitize_id(&res.advisory_id);
        fs::write(
            out_dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(res)?,
        )?;
    }
    let resolved = resolutions
        .iter()
        .filter(|r| r.status == ResolutionStatus::Resolved)
        .count();
    log::info!(target: "resolve", "{resolved}/{} advisories resolved, {} review items pending", resolutions.len(), queue.len());
    Ok(())
}

/// Fetch the combined patch for a resolution, downgrading fetch failures to
/// `Unresolved`.
fn finish_resolution(
    res: FixResolution,
    client: &ApiClient,
    out_dir: &Path,
) -> Result<FixResolution> {
    if res.fixing_commits.is_empty() {
        return Ok(res);
    }
    let advisory_id = res.advisory_id.clone();
    match fetch_combined_patch(res, client) {
        Ok((mut res, patch)) => {
            let name = res
                .combined_patch
                .clone()
                .expect("patch name set by fetch_combined_patch");
            fs::write(out_dir.join(&name), patch)?;
            res.status = ResolutionStatus::Resolved;
            Ok(res)
        }
        Err(ResolveError::NotFound(what)) => {
            log::warn!(target: "resolve", "{advisory_id}: unfetchable commit ({what}); marking unresolved");
            Ok(unresolved_stub(advisory_id, what))
        }
        Err(e) => Err(e).with_context(|| format!("fetching combined patch for {advisory_id}")),
    }
}

fn unresolved_stub(advisory_id: String, dead: String) -> FixResolution {
    FixResolution {
        advisory_id,
        repo_slug: String::new(),
        fixing_commits: Vec::new(),
        review_candidates: Vec::new(),
        sha_pre: None,
        combined_patch: None,
        status: ResolutionStatus::Unresolved,
        dead_urls: vec![dead],
        warnings: Vec::new(),
    }
}

/// Re-apply decisions to stored resolutions and refresh their patches.
pub fn review_import_stage(
    resolutions_dir: &Path,
    decisions_file: &Path,
    client: &ApiClient,
) -> Result<()> {
    let text = fs::read_to_string(decisions_file)
        .with_context(|| format!("reading {}", decisions_file.display()))?;
    let decisions: Vec<ReviewDecision> = serde_json::from_str(&text)?;
    for res in load_resolutions(resolutions_dir)? {
        let own: Vec<ReviewDecision> = decisions
            .iter()
            .filter(|d| d.advisory_id == res.advisory_id)
            .cloned()
            .collect();
        if own.is_empty() {
            continue;
        }
        let updated = apply_review_decisions(res, &own)?;
        let updated = finish_resolution(updated, client, resolutions_dir)?;
        let stem = sanitize_id(&updated.advisory_id);
        fs::write(
            resolutions_dir.join(format!("{stem}.json")),
            serde_json::to_string_pretty(&updated)?,
        )?;
    }
    Ok(())
}

pub fn load_resolutions(dir: &Path) -> Result<Vec<FixResolution>> {
    let mut out = Vec::new();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension().map(|x| x == "json").unwrap_or(false)
                && p.file_name()
                    .map(|n| n != "review_queue.json")
                    .unwrap_or(false)
        })
        .collect();
    paths.sort();
    for path in paths {
        let text = fs::read_to_string(&path)?;
        let res: FixResolution =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        out.push(res);
    }
    Ok(out)
}

/// Check out each resolved advisory's snapshot, label functions against its
/// combined patch, and emit the pooled dataset CSV.
pub fn dataset_stage(
    resolutions_dir: &Path,
    snapshots_dir: &Path,
    out: &Path,
) -> Result<DatasetSummary> {
    let mut all_rows: Vec<DatasetRow> = Vec::new();
    for res in load_resolutions(resolutions_dir)? {
        if res.status != ResolutionStatus::Resolved {
            continue;
        }
        let Some(sha_pre) = &res.sha_pre else {
            log::warn!(target: "dataset", "{}: resolved but no pre-fix snapshot (root commit?); skipping", res.advisory_id);
            continue;
        };
        let Some(patch_name) = &res.combined_patch else {
            log::warn!(target: "dataset", "{}: resolved without a combined patch; skipping", res.advisory_id);
            continue;
        };
        let patch_text = fs::read_to_string(resolutions_dir.join(patch_name))
            .with_context(|| format!("reading patch {patch_name}"))?;
        let patch = parse_unified_diff(&patch_text)
            .with_context(|| format!("parsing patch {patch_name}"))?;

        let snap_dir = snapshots_dir
            .join(res.repo_slug.replace('/', "__"))
            .join(sha_pre);
        if !snap_dir.is_dir() {
            log::warn!(target: "dataset", "{}: snapshot {} missing; skipping", res.advisory_id, snap_dir.display());
            continue;
        }
        let snapshot = analyze_snapshot(&snap_dir)?;
        for (path, why) in &snapshot.skipped {
            log::warn!(target: "dataset", "{}: skipped {path}: {why}", res.advisory_id);
        }
        all_rows.extend(snapshot_rows(&snapshot, &patch, &res.repo_slug, sha_pre));
    }
    let rows = pool_rows(all_rows);
    let summary = emit_dataset(&rows, out)?;
    log::info!(target: "dataset", "wrote {}: {} functions, {} vulnerable", out.display(), summary.total, summary.vulnerable);
    Ok(summary)
}

fn parse_strategies(list: Option<&[String]>) -> Result<Vec<ResamplingSpec>> {
    match list {
        None => Ok(ResamplingSpec::all_strategies()),
        Some(items) => items
            .iter()
            .map(|s| {
                s.parse::<ResamplingSpec>()
                    .map_err(|e| anyhow::anyhow!("bad strategy `{s}`: {e}"))
            })
            .collect(),
    }
}

/// Grid-search every configured algorithm under every resampling strategy.
pub fn sweep_stage(
    dataset: &Path,
    eval: &EvalConfig,
    strategies: Option<&[String]>,
    out_file: &Path,
) -> Result<Vec<SweepCell>> {
    let data = FeatureMatrix::load_csv(dataset)?;
    let folds = FoldPlan::build(&data.labels, eval.seed)?;
    let strategies = parse_strategies(strategies)?;
    let mut cells = Vec::new();
    for alg in &eval.algorithms {
        let grid = eval.grid_for(*alg);
        for strategy in &strategies {
            log::info!(target: "sweep", "{alg} under {strategy}");
            let outcome = grid_search(
                &StandardLearner,
                *alg,
                &grid,
                &data,
                &folds,
                strategy,
                mix_seed(eval.seed, *alg as u64),
                eval.aggregation,
            )?;
            for failure in &outcome.failures {
                log::warn!(target: "sweep", "{failure}");
            }
            log::info!(
                target: "sweep",
                "{alg} {strategy}: test F={:.4} P={:.4} R={:.4}",
                outcome.best.test.f_measure,
                outcome.best.test.precision,
                outcome.best.test.recall
            );
            cells.push(SweepCell {
                randomized_labels: false,
                outcome,
            });
        }
    }
    write_cells(&cells, out_file)?;
    Ok(cells)
}

/// The random-label sanity column: one search per algorithm on shuffled
/// labels, per seed.
pub fn rand_stage(
    dataset: &Path,
    eval: &EvalConfig,
    seeds: &[u64],
    out_file: &Path,
) -> Result<Vec<SweepCell>> {
    let data = FeatureMatrix::load_csv(dataset)?;
    let algorithms: Vec<_> = eval
        .algorithms
        .iter()
        .map(|a| (*a, eval.grid_for(*a)))
        .collect();
    let mut cells = Vec::new();
    for &seed in seeds {
        let outcomes = random_label_check(&StandardLearner, &algorithms, &data, eval.seed, seed)?;
        for outcome in outcomes {
            log::info!(
                target: "rand-check",
                "seed {seed}: {} rand F={:.4}",
                outcome.algorithm,
                outcome.best.test.f_measure
            );
            cells.push(SweepCell {
                randomized_labels: true,
                outcome,
            });
        }
    }
    write_cells(&cells, out_file)?;
    Ok(cells)
}

fn write_cells(cells: &[SweepCell], out_file: &Path) -> Result<()> {
    if let Some(parent) = out_file.parent() {
        fs::create_dir_all(parent)?;
    }
    fs::write(out_file, serde_json::to_string_pretty(cells)?)?;
    Ok(())
}

pub fn read_cells(path: &Path) -> Result<Vec<SweepCell>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

/// Merge sweep and rand cells into the two report CSVs. Multiple rand seeds
/// collapse to the per-algorithm worst case (largest F), the conservative
/// pick for a sanity bound.
pub fn report_stage(
    cells_file: &Path,
    rand_file: Option<&Path>,
    out_dir: &Path,
) -> Result<(PathBuf, PathBuf)> {
    let mut cells = read_cells(cells_file)?;
    if let Some(rand_file) = rand_file {
        if rand_file.exists() {
            let rand_cells = read_cells(rand_file)?;
            let mut best: std::collections::BTreeMap<String, SweepCell> = Default::default();
            for cell in rand_cells {
                let key = cell.outcome.algorithm.name().to_string();
                let replace = best
                    .get(&key)
                    .map(|prev| cell.outcome.best.test.f_measure > prev.outcome.best.test.f_measure)
                    .unwrap_or(true);
                if replace {
                    best.insert(key, cell);
                }
            }
            cells.extend(best.into_values());
        }
    }
    let (grid, long) = write_reports(&cells, out_dir)?;
    log::info!(target: "report", "wrote {} and {}", grid.display(), long.display());
    Ok((grid, long))
}

/// Single train run: one algorithm, one strategy, full grid search; the
/// outcome is written as JSON and a summary line goes to stdout.
pub fn train_stage(
    dataset: &Path,
    algorithm: jsvuln_core::Algorithm,
    strategy: &ResamplingSpec,
    eval: &EvalConfig,
    seed: u64,
    out_dir: &Path,
) -> Result<SearchOutcome> {
    let data = FeatureMatrix::load_csv(dataset)?;
    let folds = FoldPlan::build(&data.labels, seed)?;
    let outcome = grid_search(
        &StandardLearner,
        algorithm,
        &eval.grid_for(algorithm),
        &data,
        &folds,
        strategy,
        mix_seed(seed, algorithm as u64),
        eval.aggregation,
    )?;
    fs::create_dir_all(out_dir)?;
    let name = format!(
        "{}_{}.json",
        algorithm.name(),
        strategy.to_string().replace([':', '.'], "_")
    );
    fs::write(out_dir.join(&name), serde_json::to_string_pretty(&outcome)?)?;
    Ok(outcome)
}

/// `analyze --file`: per-function metric rows as JSON lines on stdout.
pub fn analyze_file(path: &Path) -> Result<String> {
    let source = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let analysis = jsvuln_core::analyze_source(&source, &path.to_string_lossy())
        .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
    let mut out = String::new();
    for report in analysis.reports() {
        out.push_str(&serde_json::to_string(&report)?);
        out.push('\n');
    }
    Ok(out)
}

/// Validate strategy names early so `run` fails with a config error.
pub fn validate_strategies(list: Option<&[String]>) -> Result<()> {
    parse_strategies(list).map(|_| ())
}

pub fn bail_if_missing(path: &Path, what: &str) -> Result<()> {
    if !path.exists() {
        bail!("{what} not found: {}", path.display());
    }
    Ok(())
}
