//! Snapshot analysis, hunk-to-function labeling and CSV dataset emission.
//!
//! Each advisory contributes the pre-fix snapshot of its repository: every
//! non-test function becomes a row, flagged vulnerable when some hunk of the
//! combined patch intersects its line span in the old file. Rows from all
//! snapshots are pooled; a function appears twice only if its
//! `(repo, sha_pre, path, qualified name)` differs, and flags of coinciding
//! rows are OR-merged.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;
use walkdir::WalkDir;

use crate::diff::{affected_old_range, ranges_intersect, FileDiff};
use crate::js::{analyze_source, FileAnalysis, MetricVector};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("{path}:{row}: {message}")]
    BadRow {
        path: String,
        row: usize,
        message: String,
    },
}

/// One line of the 44-column dataset: identity, position, the 35 metrics,
/// and the vulnerability flag last.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetRow {
    pub short_name: String,
    pub qualified_name: String,
    pub path: String,
    /// GitHub blob URL at the labeled snapshot.
    pub url: String,
    pub start_line: u32,
    pub start_col: u32,
    pub end_line: u32,
    pub end_col: u32,
    pub metrics: MetricVector,
    pub vulnerable: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub total: usize,
    pub vulnerable: usize,
}

/// Header of the emitted CSV: 8 identity/position columns, 35 metric columns
/// in table order, flag last.
pub fn csv_header() -> Vec<&'static str> {
    let mut h = vec![
        "name",
        "longname",
        "path",
        "url",
        "line",
        "column",
        "endline",
        "endcolumn",
    ];
    h.extend(MetricVector::COLUMN_NAMES);
    h.push("vulnerable");
    h
}

/// True when the path has a whole segment `test` or `tests`
/// (case-insensitive). Substrings like `contest.js` do not match.
pub fn is_test_path(path: &str) -> bool {
    path.split(['/', '\\'])
        .any(|seg| seg.eq_ignore_ascii_case("test") || seg.eq_ignore_ascii_case("tests"))
}

/// Drop functions living under test folders.
pub fn filter_test_functions(
    analyses: BTreeMap<String, FileAnalysis>,
) -> BTreeMap<String, FileAnalysis> {
    analyses
        .into_iter()
        .filter(|(path, _)| !is_test_path(path))
        .collect()
}

/// Analysis of every `.js` file of one snapshot, keyed by path relative to
/// the snapshot root (forward slashes).
#[derive(Debug)]
pub struct SnapshotAnalysis {
    pub files: BTreeMap<String, FileAnalysis>,
    /// Files that failed to tokenize or extract, with the reason.
    pub skipped: Vec<(String, String)>,
}

/// Walk a snapshot directory and analyze every JavaScript file. Unparseable
/// files are skipped with a warning, not fatal.
pub fn analyze_snapshot(root: &Path) -> Result<SnapshotAnalysis, DatasetError> {
    let mut files = BTreeMap::new();
    let mut skipped = Vec::new();
    for e in WalkDir::new(root).sort_by_file_name() {
        let e = e.map_err(|err| DatasetError::Io {
            path: root.display().to_string(),
            source: err.into(),
        })?;
        if !e.file_type().is_file() {
            continue;
        }
        if e.path().extension().map(|x| x == "js").unwrap_or(false) {
            let rel = e
                .path()
                .strip_prefix(root)
                .expect("walkdir stays under root")
                .to_string_lossy()
                .replace('\\', "/");
            let source = fs::read_to_string(e.path()).map_err(|err| DatasetError::Io {
                path: e.path().display().to_string(),
                source: err,
            })?;
            match analyze_source(&source, &rel) {
                Ok(analysis) => {
                    files.insert(rel, analysis);
                }
                Err(err) => {
                    log::warn!(target: "dataset", "skipping {rel}: {err}");
                    skipped.push((rel, err.to_string()));
                }
            }
        }
    }
    Ok(SnapshotAnalysis { files, skipped })
}

/// Vulnerability flags for every function of a snapshot, as
/// `path -> per-function flags` aligned with `FileAnalysis::functions`.
///
/// A function is flagged iff some hunk's affected old range intersects its
/// `[start_line, end_line]` span in a diff whose old path resolves to the
/// function's file. Hunks of files absent from the snapshot are ignored with
/// a warning.
pub fn label_functions(
    files: &BTreeMap<String, FileAnalysis>,
    patch: &[FileDiff],
) -> BTreeMap<String, Vec<u8>> {
    let mut flags: BTreeMap<String, Vec<u8>> = files
        .iter()
        .map(|(path, fa)| (path.clone(), vec![0u8; fa.functions.len()]))
        .collect();

    for fd in patch {
        let old = fd.old_file();
        let Some(fa) = files.get(old) else {
            if old != "/dev/null" {
                log::warn!(target: "dataset", "patched file not in snapshot: {old}");
            }
            continue;
        };
        let file_flags = flags.get_mut(old).expect("same keys");
        for hunk in &fd.hunks {
            let range = affected_old_range(hunk);
            for (i, f) in fa.functions.iter().enumerate() {
                let span = (f.start_line, f.end_line);
                if ranges_intersect(range, span).unwrap_or(false) {
                    file_flags[i] = 1;
                }
            }
        }
    }
    flags
}

/// Assemble dataset rows for one labeled snapshot. Test-folder files are
/// excluded here.
pub fn snapshot_rows(
    snapshot: &SnapshotAnalysis,
    patch: &[FileDiff],
    repo_slug: &str,
    sha_pre: &str,
) -> Vec<DatasetRow> {
    let flags = label_functions(&snapshot.files, patch);
    let mut rows = Vec::new();
    for (path, fa) in &snapshot.files {
        if is_test_path(path) {
            continue;
        }
        let file_flags = &flags[path];
        for (i, f) in fa.functions.iter().enumerate() {
            rows.push(DatasetRow {
                short_name: f.short_name.clone(),
                qualified_name: f.qualified_name.clone(),
                path: path.clone(),
                url: format!("https://github.com/{repo_slug}/blob/{sha_pre}/{path}"),
                start_line: f.start_line,
                start_col: f.start_col,
                end_line: f.end_line,
                end_col: f.end_col,
                metrics: fa.metrics[i].clone(),
                vulnerable: file_flags[i],
            });
        }
    }
    rows
}

/// Pool rows from several snapshots: sort deterministically, deduplicate on
/// `(url, qualified name)` — which encodes repo, sha_pre and path — and
/// OR-merge flags of duplicates.
pub fn pool_rows(mut rows: Vec<DatasetRow>) -> Vec<DatasetRow> {
    rows.sort_by(|a, b| {
        (
            &a.url,
            &a.path,
            a.start_line,
            a.start_col,
            &a.qualified_name,
        )
            .cmp(&(
                &b.url,
                &b.path,
                b.start_line,
                b.start_col,
                &b.qualified_name,
            ))
    });
    let mut out: Vec<DatasetRow> = Vec::with_capacity(rows.len());
    for row in rows {
        match out.last_mut() {
            Some(prev) if prev.url == row.url && prev.qualified_name == row.qualified_name => {
                prev.vulnerable |= row.vulnerable;
            }
            _ => out.push(row),
        }
    }
    out
}

/// Write the dataset CSV (RFC-4180 quoting, UTF-8, LF). Integers stay
/// integers; ratio metrics get six decimals.
pub fn emit_dataset(rows: &[DatasetRow], out: &Path) -> Result<DatasetSummary, DatasetError> {
    if let Some(parent) = out.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| DatasetError::Io {
                path: parent.display().to_string(),
                source: e,
            })?;
        }
    }
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(out)?;
    w.write_record(csv_header())?;
    let mut vulnerable = 0usize;
    for row in rows {
        let mut rec: Vec<String> = vec![
            row.short_name.clone(),
            row.qualified_name.clone(),
            row.path.clone(),
            row.url.clone(),
            row.start_line.to_string(),
            row.start_col.to_string(),
            row.end_line.to_string(),
            row.end_col.to_string(),
        ];
        rec.extend(row.metrics.to_values().iter().map(|v| v.to_string()));
        rec.push(row.vulnerable.to_string());
        w.write_record(&rec)?;
        vulnerable += row.vulnerable as usize;
    }
    w.flush().map_err(|e| DatasetError::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    Ok(DatasetSummary {
        total: rows.len(),
        vulnerable,
    })
}

/// Parse a dataset CSV produced by [`emit_dataset`] back into rows.
pub fn parse_dataset(path: &Path) -> Result<Vec<DatasetRow>, DatasetError> {
    let mut r = csv::Reader::from_path(path)?;
    let mut rows = Vec::new();
    for (idx, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |m: &str| DatasetError::BadRow {
            path: path.display().to_string(),
            row: idx + 2,
            message: m.to_string(),
        };
        if rec.len() != 44 {
            return Err(bad(&format!("expected 44 columns, got {}", rec.len())));
        }
        let num = |i: usize| -> Result<f64, DatasetError> {
            rec[i]
                .parse::<f64>()
                .map_err(|_| bad(&format!("column {} is not numeric: {}", i + 1, &rec[i])))
        };
        let int = |i: usize| -> Result<u64, DatasetError> {
            rec[i]
                .parse::<u64>()
                .map_err(|_| bad(&format!("column {} is not an integer: {}", i + 1, &rec[i])))
        };
        let mut m = MetricVector::default();
        let values: Vec<f64> = (8..43).map(num).collect::<Result<_, _>>()?;
        if values.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(bad("metric columns must be finite and non-negative"));
        }
        m.cc = values[0];
        m.ccl = values[1] as u64;
        m.cco = values[2] as u64;
        m.ci = values[3] as u64;
        m.clc = values[4];
        m.ldc = values[5] as u64;
        m.mccc = values[6] as u64;
        m.cycl = values[7] as u64;
        m.nl = values[8] as u64;
        m.nle = values[9] as u64;
        m.cd = values[10];
        m.tcd = values[11];
        m.cloc = values[12] as u64;
        m.tcloc = values[13] as u64;
        m.dloc = values[14] as u64;
        m.lloc = values[15] as u64;
        m.tlloc = values[16] as u64;
        m.loc = values[17] as u64;
        m.tloc = values[18] as u64;
        m.nos = values[19] as u64;
        m.tnos = values[20] as u64;
        m.numpar = values[21] as u64;
        m.params = values[22] as u64;
        m.hor_d = values[23] as u64;
        m.hor_t = values[24] as u64;
        m.hon_d = values[25] as u64;
        m.hon_t = values[26] as u64;
        m.hlen = values[27] as u64;
        m.hvoc = values[28] as u64;
        m.hdiff = values[29];
        m.hvol = values[30];
        m.heff = values[31];
        m.hbugs = values[32];
        m.htime = values[33];
        m.cycl_dens = values[34];
        let flag = int(43)?;
        if flag > 1 {
            return Err(bad("flag must be 0 or 1"));
        }
        rows.push(DatasetRow {
            short_name: rec[0].to_string(),
            qualified_name: rec[1].to_string(),
            path: rec[2].to_string(),
            url: rec[3].to_string(),
            start_line: int(4)? as u32,
            start_col: int(5)? as u32,
            end_line: int(6)? as u32,
            end_col: int(7)? as u32,
            metrics: m,
            vulnerable: flag as u8,
        });
    }
    Ok(rows)
}
