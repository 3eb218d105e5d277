//! Hyper-parameter grid search over the rotating-fold protocol.
//!
//! For every combination, all ten folds run (train on the resampled train
//! partition, score dev and test); confusion matrices are pooled across
//! folds separately for dev and test. The winning combination maximizes the
//! dev F-measure — test metrics are reported but never consulted, so the
//! selection cannot leak test information. Ties break by higher dev
//! precision, then first-in-grid order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::confusion::ConfusionCounts;
use super::folds::FoldPlan;
use super::resample::{resample, ResamplingSpec};
use super::EvalError;
use crate::ml::{mix_seed, Algorithm, FeatureMatrix, Hyperparams, Learner, ModelSpec, ParamValue};

/// Confusion counts plus derived IR metrics for one evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f_measure: f64,
    pub mcc: f64,
    pub spec: ModelSpec,
    pub resampling: ResamplingSpec,
}

impl EvalResult {
    pub fn from_counts(
        counts: ConfusionCounts,
        spec: ModelSpec,
        resampling: ResamplingSpec,
    ) -> Self {
        EvalResult {
            tp: counts.tp,
            fp: counts.fp,
            tn: counts.tn,
            fn_: counts.fn_,
            precision: counts.precision(),
            recall: counts.recall(),
            f_measure: counts.f_measure(),
            mcc: counts.mcc(),
            spec,
            resampling,
        }
    }

    pub fn counts(&self) -> ConfusionCounts {
        ConfusionCounts {
            tp: self.tp,
            fp: self.fp,
            tn: self.tn,
            fn_: self.fn_,
        }
    }
}

/// How per-fold confusions combine into one result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Sum confusion counts over folds, then derive metrics.
    #[default]
    Pooled,
    /// Derive metrics per fold, then average them (counts still summed).
    Averaged,
}

/// An ordered hyper-parameter grid: dimension order fixes the tie-break
/// order of combinations.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub dims: Vec<(String, Vec<ParamValue>)>,
}

impl GridSpec {
    pub fn empty() -> Self {
        GridSpec { dims: Vec::new() }
    }

    pub fn add(mut self, name: &str, values: Vec<ParamValue>) -> Self {
        self.dims.push((name.to_string(), values));
        self
    }

    /// Cartesian expansion, first dimension slowest. An empty grid yields
    /// the single empty combination.
    pub fn expand(&self) -> Vec<Hyperparams> {
        let mut combos = vec![Hyperparams::new()];
        for (name, values) in &self.dims {
            let mut next = Vec::with_capacity(combos.len() * values.len().max(1));
            for combo in &combos {
                for v in values {
                    let mut c = combo.clone();
                    c.insert(name.clone(), v.clone());
                    next.push(c);
                }
            }
            combos = next;
        }
        combos
    }
}

/// Per-fold outcome of one combination.
#[derive(Debug, Clone)]
struct FoldOutcome {
    dev: ConfusionCounts,
    test: ConfusionCounts,
}

/// One grid cell: the combination plus its aggregated dev/test results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CellOutcome {
    pub params: Hyperparams,
    pub dev: EvalResult,
    pub test: EvalResult,
}

/// Full outcome of a search: the dev-selected best cell plus the whole table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub algorithm: Algorithm,
    pub resampling: ResamplingSpec,
    pub best: CellOutcome,
    pub cells: Vec<CellOutcome>,
    /// Combinations that failed to train, with the error text.
    pub failures: Vec<String>,
}

/// Exhaustive search over the grid. Fold training runs in parallel; the
/// reduction is ordered by (combination, fold) so concurrency never changes
/// the outcome.
pub fn grid_search(
    learner: &dyn Learner,
    algorithm: Algorithm,
    grid: &GridSpec,
    data: &FeatureMatrix,
    folds: &FoldPlan,
    resampling: &ResamplingSpec,
    seed: u64,
    aggregation: Aggregation,
) -> Result<SearchOutcome, EvalError> {
    resampling.validate()?;
    let combos = grid.expand();
    if combos.is_empty() {
        return Err(EvalError::EmptyGrid);
    }

    let fold_list: Vec<_> = folds.folds().collect();
    let units: Vec<(usize, usize)> = (0..combos.len())
        .flat_map(|c| (0..fold_list.len()).map(move |f| (c, f)))
        .collect();

    let results: Vec<(usize, usize, Result<FoldOutcome, EvalError>)> = units
        .par_iter()
        .map(|&(c, f)| {
            let outcome = run_cell_fold(
                learner,
                algorithm,
                &combos[c],
                data,
                &fold_list[f],
                resampling,
                mix_seed(seed, (c as u64) << 32 | f as u64),
            );
            (c, f, outcome)
        })
        .collect();

    let mut per_combo: Vec<Vec<Option<FoldOutcome>>> =
        vec![vec![None; fold_list.len()]; combos.len()];
    let mut failures = Vec::new();
    let mut failed = vec![false; combos.len()];
    for (c, f, res) in results {
        match res {
            Ok(out) => per_combo[c][f] = Some(out),
            Err(e) => {
                if !failed[c] {
                    failures.push(format!(
                        "{algorithm} {:?} fold {f}: {e}",
                        summarize(&combos[c])
                    ));
                }
                failed[c] = true;
            }
        }
    }

    let mut cells: Vec<CellOutcome> = Vec::new();
    for (c, combo) in combos.iter().enumerate() {
        if failed[c] {
            continue;
        }
        let outcomes: Vec<FoldOutcome> = per_combo[c]
            .iter()
            .map(|o| o.clone().expect("non-failed combos have all folds"))
            .collect();
        let spec = ModelSpec {
            algorithm,
            hyperparams: combo.clone(),
        };
        let dev = aggregate(
            outcomes.iter().map(|o| o.dev),
            aggregation,
            spec.clone(),
            *resampling,
        );
        let test = aggregate(
            outcomes.iter().map(|o| o.test),
            aggregation,
            spec.clone(),
            *resampling,
        );
        cells.push(CellOutcome {
            params: combo.clone(),
            dev,
            test,
        });
    }
    if cells.is_empty() {
        return Err(EvalError::AllCombinationsFailed(failures.join("; ")));
    }

    // Selection on dev metrics only: F, then precision, then grid order.
    let mut best = 0usize;
    for i in 1..cells.len() {
        let (bi, ci) = (&cells[best].dev, &cells[i].dev);
        if ci.f_measure > bi.f_measure + 1e-15
            || ((ci.f_measure - bi.f_measure).abs() <= 1e-15 && ci.precision > bi.precision + 1e-15)
        {
            best = i;
        }
    }

    Ok(SearchOutcome {
        algorithm,
        resampling: *resampling,
        best: cells[best].clone(),
        cells,
        failures,
    })
}

fn summarize(params: &Hyperparams) -> Vec<String> {
    params.iter().map(|(k, v)| format!("{k}={v}")).collect()
}

fn aggregate(
    outcomes: impl Iterator<Item = ConfusionCounts>,
    aggregation: Aggregation,
    spec: ModelSpec,
    resampling: ResamplingSpec,
) -> EvalResult {
    let all: Vec<ConfusionCounts> = outcomes.collect();
    let mut pooled = ConfusionCounts::default();
    for c in &all {
        pooled.add(c);
    }
    match aggregation {
        Aggregation::Pooled => EvalResult::from_counts(pooled, spec, resampling),
        Aggregation::Averaged => {
            let n = all.len() as f64;
            let mut r = EvalResult::from_counts(pooled, spec, resampling);
            r.precision = all.iter().map(ConfusionCounts::precision).sum::<f64>() / n;
            r.recall = all.iter().map(ConfusionCounts::recall).sum::<f64>() / n;
            r.f_measure = all.iter().map(ConfusionCounts::f_measure).sum::<f64>() / n;
            r.mcc = all.iter().map(ConfusionCounts::mcc).sum::<f64>() / n;
            r
        }
    }
}

fn run_cell_fold(
    learner: &dyn Learner,
    algorithm: Algorithm,
    params: &Hyperparams,
    data: &FeatureMatrix,
    fold: &super::folds::Fold,
    resampling: &ResamplingSpec,
    seed: u64,
) -> Result<FoldOutcome, EvalError> {
    let train_idx = resample(
        &fold.train,
        &data.labels,
        resampling,
        mix_seed(seed, 0x5253),
    )?;
    let spec = ModelSpec {
        algorithm,
        hyperparams: params.clone(),
    };
    let model = learner
        .train(&spec, data, &train_idx, &fold.dev, mix_seed(seed, 0x5452))
        .map_err(EvalError::Ml)?;

    let eval_on = |idx: &[usize]| -> Result<ConfusionCounts, EvalError> {
        let rows = data.select(idx);
        let predicted = model.predict(&rows).map_err(EvalError::Ml)?;
        Ok(ConfusionCounts::from_predictions(&rows.labels, &predicted))
    };
    Ok(FoldOutcome {
        dev: eval_on(&fold.dev)?,
        test: eval_on(&fold.test)?,
    })
}

/// The trivial always-positive baseline run through the same fold protocol.
/// Pooled over all folds this reproduces the closed form: precision equals
/// the positive prevalence, recall is 1, F = 2p/(1+p).
pub fn zeror_baseline(
    learner: &dyn Learner,
    data: &FeatureMatrix,
    folds: &FoldPlan,
) -> Result<EvalResult, EvalError> {
    let outcome = grid_search(
        learner,
        Algorithm::Zeror,
        &GridSpec::empty(),
        data,
        folds,
        &ResamplingSpec::none(),
        0,
        Aggregation::Pooled,
    )?;
    Ok(outcome.best.test)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ml::{MlError, Model, StandardLearner};

    fn tiny_data() -> FeatureMatrix {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let x = i as f64;
            if i % 4 == 0 {
                rows.push(vec![x, 100.0]);
                labels.push(1);
            } else {
                rows.push(vec![x, 0.0]);
                labels.push(0);
            }
        }
        FeatureMatrix::from_rows(rows, labels).unwrap()
    }

    #[test]
    fn grid_expansion_order_is_first_dimension_slowest() {
        let grid = GridSpec::empty()
            .add("a", vec![ParamValue::Int(1), ParamValue::Int(2)])
            .add("b", vec![ParamValue::Int(10), ParamValue::Int(20)]);
        let combos = grid.expand();
        let rendered: Vec<String> = combos
            .iter()
            .map(|c| format!("a={} b={}", c["a"], c["b"]))
            .collect();
        assert_eq!(
            rendered,
            vec!["a=1 b=10", "a=1 b=20", "a=2 b=10", "a=2 b=20"]
        );
    }

    #[test]
    fn empty_grid_is_single_combination() {
        assert_eq!(GridSpec::empty().expand().len(), 1);
    }

    #[test]
    fn single_combination_is_best() {
        let data = tiny_data();
        let folds = FoldPlan::build(&data.labels, 3).unwrap();
        let grid = GridSpec::empty().add("k", vec![ParamValue::Int(1)]);
        let out = grid_search(
            &StandardLearner,
            Algorithm::Knn,
            &grid,
            &data,
            &folds,
            &ResamplingSpec::none(),
            7,
            Aggregation::Pooled,
        )
        .unwrap();
        assert_eq!(out.cells.len(), 1);
        assert_eq!(out.best.params["k"], ParamValue::Int(1));
        // The second feature separates classes perfectly; k=1 should ace it.
        assert_eq!(out.best.test.f_measure, 1.0);
    }

    #[test]
    fn zeror_baseline_closed_form() {
        let data = tiny_data(); // prevalence 10/40
        let folds = FoldPlan::build(&data.labels, 5).unwrap();
        let r = zeror_baseline(&StandardLearner, &data, &folds).unwrap();
        let p = 10.0 / 40.0;
        assert!((r.precision - p).abs() < 1e-12);
        assert!((r.recall - 1.0).abs() < 1e-12);
        assert!((r.f_measure - 2.0 * p / (1.0 + p)).abs() < 1e-12);
    }

    #[test]
    fn search_is_deterministic() {
        let data = tiny_data();
        let folds = FoldPlan::build(&data.labels, 3).unwrap();
        let grid = GridSpec::empty().add("k", vec![ParamValue::Int(1), ParamValue::Int(3)]);
        let run = || {
            grid_search(
                &StandardLearner,
                Algorithm::Knn,
                &grid,
                &data,
                &folds,
                &ResamplingSpec::over(0.5),
                7,
                Aggregation::Pooled,
            )
            .unwrap()
        };
        let a = run();
        let b = run();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn failing_combination_is_logged_and_search_continues() {
        struct Flaky;
        impl Learner for Flaky {
            fn train(
                &self,
                spec: &ModelSpec,
                data: &FeatureMatrix,
                train_idx: &[usize],
                dev_idx: &[usize],
                seed: u64,
            ) -> Result<Box<dyn Model>, MlError> {
                if spec.hyperparams.get("k") == Some(&ParamValue::Int(3)) {
                    return Err(MlError::Numeric("rigged failure"));
                }
                StandardLearner.train(spec, data, train_idx, dev_idx, seed)
            }
        }
        let data = tiny_data();
        let folds = FoldPlan::build(&data.labels, 3).unwrap();
        let grid = GridSpec::empty().add("k", vec![ParamValue::Int(1), ParamValue::Int(3)]);
        let out = grid_search(
            &Flaky,
            Algorithm::Knn,
            &grid,
            &data,
            &folds,
            &ResamplingSpec::none(),
            7,
            Aggregation::Pooled,
        )
        .unwrap();
        assert_eq!(out.cells.len(), 1);
        assert_eq!(out.failures.len(), 1);
        assert_eq!(out.best.params["k"], ParamValue::Int(1));
    }

    #[test]
    fn f_measure_consistent_with_own_counts() {
        let data = tiny_data();
        let folds = FoldPlan::build(&data.labels, 3).unwrap();
        let out = grid_search(
            &StandardLearner,
            Algorithm::Tree,
            &GridSpec::empty(),
            &data,
            &folds,
            &ResamplingSpec::none(),
            7,
            Aggregation::Pooled,
        )
        .unwrap();
        for cell in [&out.best.dev, &out.best.test] {
            // Recompute both metrics from the raw counts through separate
            // formula spellings.
            let (tp, fp, tn, fn_) = (
                cell.tp as f64,
                cell.fp as f64,
                cell.tn as f64,
                cell.fn_ as f64,
            );
            let f_direct = if tp == 0.0 {
                0.0
            } else {
                2.0 * tp / (2.0 * tp + fp + fn_)
            };
            assert!((cell.f_measure - f_direct).abs() < 1e-12);
            let denom2 = (tp + fp) * (tp + fn_) * (tn + fp) * (tn + fn_);
            let mcc_direct = if denom2 == 0.0 {
                0.0
            } else {
                (tp * tn - fp * fn_) / denom2.sqrt()
            };
            assert!((cell.mcc - mcc_direct).abs() < 1e-12);
        }
    }

    #[test]
    fn averaged_aggregation_means_per_fold_metrics() {
        let data = tiny_data();
        let folds = FoldPlan::build(&data.labels, 3).unwrap();
        let run = |agg| {
            grid_search(
                &StandardLearner,
                Algorithm::Knn,
                &GridSpec::empty().add("k", vec![ParamValue::Int(1)]),
                &data,
                &folds,
                &ResamplingSpec::none(),
                7,
                agg,
            )
            .unwrap()
        };
        let pooled = run(Aggregation::Pooled);
        let averaged = run(Aggregation::Averaged);
        // Counts are summed either way; k=1 on the separable feature is
        // perfect in every fold, so both aggregations land on F = 1.
        assert_eq!(pooled.best.test.counts(), averaged.best.test.counts());
        assert!((averaged.best.test.f_measure - 1.0).abs() < 1e-12);
        // On an imperfect learner the two modes may differ; both must stay
        // within [0, 1].
        let avg_tree = grid_search(
            &StandardLearner,
            Algorithm::Tree,
            &GridSpec::empty().add("max_depth", vec![ParamValue::Int(1)]),
            &data,
            &folds,
            &ResamplingSpec::none(),
            7,
            Aggregation::Averaged,
        )
        .unwrap();
        let f = avg_tree.best.test.f_measure;
        assert!((0.0..=1.0).contains(&f));
    }

    #[test]
    fn ties_resolve_to_first_in_grid_order() {
        let data = tiny_data();
        let folds = FoldPlan::build(&data.labels, 3).unwrap();
        // Both k values exceed every training partition size, so they clamp
        // to the same effective k and predict identically; the winner must be
        // the first combination in grid order.
        let grid = GridSpec::empty().add("k", vec![ParamValue::Int(500), ParamValue::Int(900)]);
        let out = grid_search(
            &StandardLearner,
            Algorithm::Knn,
            &grid,
            &data,
            &folds,
            &ResamplingSpec::none(),
            7,
            Aggregation::Pooled,
        )
        .unwrap();
        assert_eq!(out.cells.len(), 2);
        assert_eq!(out.cells[0].dev.counts(), out.cells[1].dev.counts());
        assert_eq!(out.best.params["k"], ParamValue::Int(500));
    }
}
