//! Sweep reporting: an algorithm-by-strategy F-measure grid with a median
//! row, plus a long-form CSV with full IR metrics per cell.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::grid::SearchOutcome;
use super::resample::{ResamplingSpec, SamplingStrategy};
use super::EvalError;
use crate::ml::Algorithm;

/// One sweep result: an algorithm under one strategy (or the random-label
/// column).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepCell {
    pub randomized_labels: bool,
    pub outcome: SearchOutcome,
}

/// Column captions of the grid report, in order.
pub fn strategy_columns() -> Vec<String> {
    let mut cols: Vec<String> = vec!["none".into()];
    for r in [25, 50, 75, 100] {
        cols.push(format!("over{r}"));
    }
    for r in [25, 50, 75, 100] {
        cols.push(format!("under{r}"));
    }
    cols.push("rand".into());
    cols
}

fn column_of(cell: &SweepCell) -> String {
    if cell.randomized_labels {
        return "rand".into();
    }
    let r = cell.outcome.resampling;
    match (r.strategy, r.ratio) {
        (SamplingStrategy::None, _) => "none".into(),
        (SamplingStrategy::Over, Some(x)) => format!("over{}", (x * 100.0).round() as u32),
        (SamplingStrategy::Under, Some(x)) => format!("under{}", (x * 100.0).round() as u32),
        _ => "invalid".into(),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x:.4}"),
        None => String::new(),
    }
}

/// Median of a non-empty slice (mean of the middle two for even counts).
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Write the F-measure grid (one row per algorithm, one column per strategy
/// plus the random-label column, median row last) and the long-form metrics
/// CSV. Returns the two file paths.
pub fn write_reports(
    cells: &[SweepCell],
    out_dir: &Path,
) -> Result<(std::path::PathBuf, std::path::PathBuf), EvalError> {
    fs::create_dir_all(out_dir).map_err(|e| EvalError::Io {
        path: out_dir.display().to_string(),
        source: e,
    })?;
    let grid_path = out_dir.join("f_measure_grid.csv");
    let long_path = out_dir.join("results_long.csv");

    let columns = strategy_columns();
    let lookup = |alg: Algorithm, col: &str| -> Option<f64> {
        cells
            .iter()
            .find(|c| c.outcome.algorithm == alg && column_of(c) == col)
            .map(|c| c.outcome.best.test.f_measure)
    };

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&grid_path)
        .map_err(EvalError::Csv)?;
    let mut header = vec!["algorithm".to_string()];
    header.extend(columns.iter().cloned());
    w.write_record(&header).map_err(EvalError::Csv)?;
    for alg in Algorithm::REPORT_ORDER {
        let mut rec = vec![alg.name().to_string()];
        for col in &columns {
            rec.push(fmt_opt(lookup(alg, col)));
        }
        w.write_record(&rec).map_err(EvalError::Csv)?;
    }
    // Column-wise median over the algorithm rows.
    let mut rec = vec!["median".to_string()];
    for col in &columns {
        let values: Vec<f64> = Algorithm::REPORT_ORDER
            .iter()
            .filter_map(|alg| lookup(*alg, col))
            .collect();
        rec.push(fmt_opt(median(&values)));
    }
    w.write_record(&rec).map_err(EvalError::Csv)?;
    w.flush().map_err(|e| EvalError::Io {
        path: grid_path.display().to_string(),
        source: e,
    })?;

    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(&long_path)
        .map_err(EvalError::Csv)?;
    w.write_record([
        "algorithm",
        "labels",
        "strategy",
        "split",
        "tp",
        "fp",
        "tn",
        "fn",
        "precision",
        "recall",
        "f_measure",
        "mcc",
        "best_params",
    ])
    .map_err(EvalError::Csv)?;
    for cell in cells {
        let labels = if cell.randomized_labels {
            "random"
        } else {
            "real"
        };
        let params = serde_json::to_string(&cell.outcome.best.params).expect("params serialize");
        for (split, r) in [
            ("dev", &cell.outcome.best.dev),
            ("test", &cell.outcome.best.test),
        ] {
            w.write_record([
                cell.outcome.algorithm.name(),
                labels,
                &column_of(cell),
                split,
                &r.tp.to_string(),
                &r.fp.to_string(),
                &r.tn.to_string(),
                &r.fn_.to_string(),
                &format!("{:.6}", r.precision),
                &format!("{:.6}", r.recall),
                &format!("{:.6}", r.f_measure),
                &format!("{:.6}", r.mcc),
                &params,
            ])
            .map_err(EvalError::Csv)?;
        }
    }
    w.flush().map_err(|e| EvalError::Io {
        path: long_path.display().to_string(),
        source: e,
    })?;

    Ok((grid_path, long_path))
}

/// Default resampling ratios used by sweeps, mirroring the report columns.
pub fn sweep_strategies() -> Vec<ResamplingSpec> {
    ResamplingSpec::all_strategies()
}
