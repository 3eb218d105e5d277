//! Acceptance suite: one test per release criterion, each printing a
//! PASS/FAIL line. Run with `cargo test -p jsvuln-cli --test acceptance`
//! (`-- --nocapture` to see the lines).

use std::fs;
use std::path::PathBuf;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jsvuln_core::dataset::label_functions;
use jsvuln_core::eval::{
    grid_search, random_label_check, resample, zeror_baseline, Aggregation, FoldPlan, GridSpec,
    ResamplingSpec,
};
use jsvuln_core::js::{
    halstead_counts, lexer::Token, lexer::TokenKind, metrics::halstead_derive, MetricVector,
};
use jsvuln_core::ml::logistic::{logistic_grad, logistic_loss};
use jsvuln_core::ml::mlp::{run_adaptive, AdaptiveTrainable, MlpState, ScheduleStep};
use jsvuln_core::ml::{
    Algorithm, FeatureMatrix, Learner, MlError, Model, ModelSpec, ParamValue, StandardLearner,
};
use jsvuln_core::{affected_old_range, analyze_source, parse_unified_diff, ranges_intersect};

fn pass(n: u32, label: &str) {
    println!("acceptance {n} ({label}): PASS");
}

// -------------------------------------------------------------------------
// 1. Worked-example fidelity
// -------------------------------------------------------------------------

const EXAMPLE_PATCH: &str = "--- /path/to/original.js\t timestamp\n\
                             +++ /path/to/new.js\t timestamp\n\
                             @@ -4,1 +4,2 @@\n\
                             +  var tmp = bar(i);\n\
                             +  return tmp;\n\
                             -  return bar(i);\n";

const EXAMPLE_SOURCE: &str =
    "function foo(a) {\n  var i = 4 * a;\n  // call bar\n  var tmp = bar(i);\n  return tmp;\n}";

#[test]
fn criterion_1_worked_example_fidelity() {
    let started = Instant::now();

    let diffs = parse_unified_diff(EXAMPLE_PATCH).unwrap();
    assert_eq!(diffs.len(), 1);
    let hunk = &diffs[0].hunks[0];
    let range = affected_old_range(hunk);
    assert_eq!(range, (4, 5), "hunk range must be exactly [4,5]");

    let analysis = analyze_source(EXAMPLE_SOURCE, "path/to/original.js").unwrap();
    let foo = &analysis.functions[0];
    assert_eq!(foo.short_name, "foo");
    assert_eq!((foo.start_line, foo.end_line), (1, 6), "span must be [1,6]");
    assert!(ranges_intersect(range, (foo.start_line, foo.end_line)).unwrap());

    // Through the labeling pipeline itself, keyed by the patch's old path.
    let analysis = analyze_source(EXAMPLE_SOURCE, "/path/to/original.js").unwrap();
    let mut files = std::collections::BTreeMap::new();
    files.insert("/path/to/original.js".to_string(), analysis);
    let flags = label_functions(&files, &diffs);
    assert_eq!(
        flags["/path/to/original.js"],
        vec![1],
        "foo must be labeled vulnerable"
    );

    let elapsed = started.elapsed();
    assert!(
        elapsed.as_secs_f64() < 1.0,
        "took {elapsed:?}, budget is 1 s"
    );
    pass(1, "worked-example fidelity");
}

// -------------------------------------------------------------------------
// 2. ZeroR closed form
// -------------------------------------------------------------------------

fn synthetic_noise_data(n: usize, positives: usize, d: usize, seed: u64) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        rows.push((0..d).map(|_| rng.random_range(-1.0..1.0)).collect());
        labels.push(u8::from(i < positives));
    }
    FeatureMatrix::from_rows(rows, labels).unwrap()
}

#[test]
fn criterion_2_zeror_closed_form() {
    for (n, positives) in [(12_125usize, 1_496usize), (400, 200), (1000, 10)] {
        let data = synthetic_noise_data(n, positives, 1, 7);
        let folds = FoldPlan::build(&data.labels, 42).unwrap();
        let r = zeror_baseline(&StandardLearner, &data, &folds).unwrap();
        let p = positives as f64 / n as f64;
        assert!(
            (r.precision - p).abs() < 1e-12,
            "precision {} != {p}",
            r.precision
        );
        assert!((r.recall - 1.0).abs() < 1e-12);
        assert!((r.f_measure - 2.0 * p / (1.0 + p)).abs() < 1e-12);
    }
    // At prevalence 1496/12125 the closed form lands on the published
    // baseline after rounding.
    let p: f64 = 1496.0 / 12125.0;
    let f: f64 = 2.0 * p / (1.0 + p);
    assert!((f - 0.21).abs() < 0.015, "F = {f}");
    assert!((p - 0.12).abs() < 0.005, "P = {p}");
    pass(2, "zeror closed form");
}

// -------------------------------------------------------------------------
// 3. Quantitative reproduction on the public dataset (external fixture)
// -------------------------------------------------------------------------

fn external_dataset() -> Option<PathBuf> {
    if let Ok(p) = std::env::var("JSVULN_DATASET") {
        let p = PathBuf::from(p);
        if p.exists() {
            return Some(p);
        }
    }
    let default =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/external/dataset.csv");
    default.exists().then_some(default)
}

#[test]
fn criterion_3_quantitative_reproduction() {
    let Some(path) = external_dataset() else {
        println!(
            "acceptance 3 (quantitative reproduction): SKIP — external dataset fixture \
             unavailable (set JSVULN_DATASET to the public CSV to enable; non-gating)"
        );
        return;
    };
    let data = FeatureMatrix::load_csv(&path).unwrap();
    let folds = FoldPlan::build(&data.labels, 42).unwrap();
    let none = ResamplingSpec::none();

    let knn = grid_search(
        &StandardLearner,
        Algorithm::Knn,
        &jsvuln_core::eval::default_grid(Algorithm::Knn),
        &data,
        &folds,
        &none,
        42,
        Aggregation::Pooled,
    )
    .unwrap();
    println!(
        "acceptance 3: knn test F={:.4} P={:.4} R={:.4}",
        knn.best.test.f_measure, knn.best.test.precision, knn.best.test.recall
    );
    assert!(
        knn.best.test.f_measure >= 0.70,
        "knn F = {}",
        knn.best.test.f_measure
    );

    let mut f_values = Vec::new();
    for alg in Algorithm::REPORT_ORDER {
        let out = grid_search(
            &StandardLearner,
            alg,
            &jsvuln_core::eval::default_grid(alg),
            &data,
            &folds,
            &none,
            42,
            Aggregation::Pooled,
        )
        .unwrap();
        println!("acceptance 3: {alg} test F={:.4}", out.best.test.f_measure);
        f_values.push(out.best.test.f_measure);
    }
    let median = jsvuln_core::eval::median(&f_values).unwrap();
    assert!(
        (median - 0.71).abs() <= 0.08,
        "median across algorithms = {median}"
    );
    pass(3, "quantitative reproduction");
}

// -------------------------------------------------------------------------
// 4. Random-label sanity
// -------------------------------------------------------------------------

/// Reduced one-point grids that keep the full-size sanity sweep inside a
/// test-time budget; grids are configuration, the protocol is not reduced.
fn sanity_grids() -> Vec<(Algorithm, GridSpec)> {
    use ParamValue::{Float, Int, List};
    Algorithm::REPORT_ORDER
        .iter()
        .map(|alg| {
            let grid = match alg {
                Algorithm::Knn => GridSpec::empty().add("k", vec![Int(5)]),
                Algorithm::Tree => GridSpec::empty().add("max_depth", vec![Int(8)]),
                Algorithm::Forest => GridSpec::empty()
                    .add("trees", vec![Int(10)])
                    .add("max_depth", vec![Int(8)]),
                Algorithm::Svm => GridSpec::empty()
                    .add("c", vec![Float(1.0)])
                    .add("epochs", vec![Int(50)]),
                Algorithm::Logistic => GridSpec::empty()
                    .add("lambda", vec![Float(0.01)])
                    .add("max_iter", vec![Int(100)]),
                Algorithm::Linear | Algorithm::Bayes => GridSpec::empty(),
                Algorithm::DnnS => GridSpec::empty()
                    .add("layers", vec![List(vec![8])])
                    .add("lr", vec![Float(0.1)])
                    .add("epochs", vec![Int(5)])
                    .add("batch", vec![Int(256)]),
                Algorithm::DnnC => GridSpec::empty()
                    .add("layers", vec![List(vec![8])])
                    .add("lr", vec![Float(0.1)])
                    .add("batch", vec![Int(256)])
                    .add("max_epochs", vec![Int(12)]),
                Algorithm::Zeror => GridSpec::empty(),
            };
            (*alg, grid)
        })
        .collect()
}

#[test]
fn criterion_4_random_label_sanity() {
    // Same size and prevalence as the full dataset, noise features.
    let data = synthetic_noise_data(12_125, 1_496, 2, 99);
    let algorithms = sanity_grids();
    for seed in [101u64, 102, 103, 104, 105] {
        let outcomes = random_label_check(&StandardLearner, &algorithms, &data, 42, seed).unwrap();
        for out in &outcomes {
            println!(
                "acceptance 4: seed {seed} {} rand F = {:.4}",
                out.algorithm, out.best.test.f_measure
            );
            assert!(
                out.best.test.f_measure <= 0.25,
                "seed {seed}: {} rand F = {}",
                out.algorithm,
                out.best.test.f_measure
            );
        }
    }
    pass(4, "random-label sanity, 5 seeds");
}

// -------------------------------------------------------------------------
// 5. Resampling arithmetic
// -------------------------------------------------------------------------

#[test]
fn criterion_5_resampling_arithmetic() {
    let mut labels = vec![0u8; 1000];
    labels.extend(vec![1u8; 100]);
    let idx: Vec<usize> = (0..1100).collect();

    let counts = |out: &[usize]| -> (usize, usize) {
        let pos = out.iter().filter(|&&i| labels[i] == 1).count();
        (out.len() - pos, pos)
    };

    for ratio in [0.25, 0.50, 0.75, 1.00] {
        let over = resample(&idx, &labels, &ResamplingSpec::over(ratio), 5).unwrap();
        let expect_min = (ratio * 1000.0).round() as usize;
        assert_eq!(counts(&over), (1000, expect_min.max(100)), "over {ratio}");

        let under = resample(&idx, &labels, &ResamplingSpec::under(ratio), 5).unwrap();
        let expect_maj = (100.0 / ratio).round() as usize;
        assert_eq!(counts(&under), (expect_maj.min(1000), 100), "under {ratio}");
    }
    pass(5, "resampling arithmetic, 8 cells");
}

// -------------------------------------------------------------------------
// 6. Gradient checks
// -------------------------------------------------------------------------

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / (a.abs() + b.abs()).max(1e-8)
}

#[test]
fn criterion_6_gradient_checks() {
    let mut rng = ChaCha8Rng::seed_from_u64(606);

    // Logistic: analytic gradient vs central differences, 20 instances.
    for _ in 0..20 {
        let n = rng.random_range(5..15);
        let d = rng.random_range(1..6);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect();
        let labels: Vec<u8> = (0..n).map(|_| rng.random_range(0..2) as u8).collect();
        let data = FeatureMatrix::from_rows(rows, labels).unwrap();
        let w: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: f64 = rng.random_range(-1.0..1.0);
        let lambda = rng.random_range(0.0..0.5);
        let (gw, gb) = logistic_grad(&w, b, &data, lambda);
        let eps = 1e-6;
        for j in 0..d {
            let mut wp = w.clone();
            let mut wm = w.clone();
            wp[j] += eps;
            wm[j] -= eps;
            let fd = (logistic_loss(&wp, b, &data, lambda) - logistic_loss(&wm, b, &data, lambda))
                / (2.0 * eps);
            assert!(rel_err(fd, gw[j]) < 1e-5, "logistic w[{j}]");
        }
        let fd_b = (logistic_loss(&w, b + eps, &data, lambda)
            - logistic_loss(&w, b - eps, &data, lambda))
            / (2.0 * eps);
        assert!(rel_err(fd_b, gb) < 1e-5, "logistic bias");
    }

    // MLP backprop vs central differences on two-hidden-layer toy nets,
    // 20 instances.
    for t in 0..20 {
        let d = rng.random_range(2..4);
        let h = rng.random_range(2..5);
        let n = rng.random_range(4..9);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..d).map(|_| rng.random_range(0.1..1.5)).collect())
            .collect();
        let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 2 == 0)).collect();
        let data = FeatureMatrix::from_rows(rows, labels).unwrap();
        let net = MlpState::init(&[d, h, 1], &mut rng);
        let idx: Vec<usize> = (0..n).collect();
        let (gw, gb) = net.batch_grads(&data, &idx);
        let eps = 1e-6;
        for l in 0..net.weights.len() {
            for k in 0..net.weights[l].len() {
                let mut plus = net.clone();
                let mut minus = net.clone();
                plus.weights[l][k] += eps;
                minus.weights[l][k] -= eps;
                let fd = (plus.loss(&data, &idx) - minus.loss(&data, &idx)) / (2.0 * eps);
                assert!(rel_err(fd, gw[l][k]) < 1e-4, "mlp {t} w[{l}][{k}]");
            }
            for o in 0..net.biases[l].len() {
                let mut plus = net.clone();
                let mut minus = net.clone();
                plus.biases[l][o] += eps;
                minus.biases[l][o] -= eps;
                let fd = (plus.loss(&data, &idx) - minus.loss(&data, &idx)) / (2.0 * eps);
                assert!(rel_err(fd, gb[l][o]) < 1e-4, "mlp {t} b[{l}][{o}]");
            }
        }
    }
    pass(6, "gradient checks, logistic 1e-5 / mlp 1e-4");
}

// -------------------------------------------------------------------------
// 7. No test-set leakage in selection
// -------------------------------------------------------------------------

/// Rigged learner: mode 0 is perfect on its fold's dev rows and wrong on
/// everything else; mode 1 is the reverse. Row identity travels in feature 0.
struct RiggedLearner;

struct RiggedModel {
    dev_rows: std::collections::BTreeSet<usize>,
    labels: Vec<u8>,
    mode: i64,
}

impl Model for RiggedModel {
    fn predict(&self, rows: &FeatureMatrix) -> Result<Vec<u8>, MlError> {
        Ok((0..rows.rows())
            .map(|i| {
                let idx = rows.row(i)[0] as usize;
                let truth = self.labels[idx];
                let in_dev = self.dev_rows.contains(&idx);
                let correct = (self.mode == 0) == in_dev;
                if correct {
                    truth
                } else {
                    1 - truth
                }
            })
            .collect())
    }
}

impl Learner for RiggedLearner {
    fn train(
        &self,
        spec: &ModelSpec,
        data: &FeatureMatrix,
        _train_idx: &[usize],
        dev_idx: &[usize],
        _seed: u64,
    ) -> Result<Box<dyn Model>, MlError> {
        let mode = match spec.hyperparams.get("mode") {
            Some(ParamValue::Int(m)) => *m,
            _ => 0,
        };
        Ok(Box::new(RiggedModel {
            dev_rows: dev_idx.iter().copied().collect(),
            labels: data.labels.clone(),
            mode,
        }))
    }
}

#[test]
fn criterion_7_no_leakage() {
    // Feature 0 encodes the row index so the rigged model can identify rows.
    let n = 60;
    let rows: Vec<Vec<f64>> = (0..n).map(|i| vec![i as f64]).collect();
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 3 == 0)).collect();
    let data = FeatureMatrix::from_rows(rows, labels).unwrap();
    let folds = FoldPlan::build(&data.labels, 9).unwrap();

    let grid = GridSpec::empty().add("mode", vec![ParamValue::Int(0), ParamValue::Int(1)]);
    let out = grid_search(
        &RiggedLearner,
        Algorithm::Knn,
        &grid,
        &data,
        &folds,
        &ResamplingSpec::none(),
        1,
        Aggregation::Pooled,
    )
    .unwrap();

    let dev_best = &out.best;
    assert_eq!(
        dev_best.params["mode"],
        ParamValue::Int(0),
        "dev-optimal must win"
    );
    assert!(dev_best.dev.f_measure > 0.99);
    assert!(dev_best.test.f_measure < 0.01);

    // The rejected combination is test-optimal, so the chosen one is provably
    // not selected on test metrics.
    let other = out
        .cells
        .iter()
        .find(|c| c.params["mode"] == ParamValue::Int(1))
        .unwrap();
    assert!(other.test.f_measure > 0.99);
    assert!(other.test.f_measure > dev_best.test.f_measure);
    pass(7, "no-leakage selection");
}

// -------------------------------------------------------------------------
// 8. Metric golden suite
// -------------------------------------------------------------------------

/// Hand-computed expectations for one function. Halstead derivatives are
/// pinned through the hand-counted operator/operand totals plus the published
/// formulas.
struct Golden {
    name: &'static str,
    source: &'static str,
    /// Which function of the file (by extraction order).
    index: usize,
    loc: u64,
    tloc: u64,
    lloc: u64,
    tlloc: u64,
    cloc: u64,
    tcloc: u64,
    dloc: u64,
    mccc: u64,
    nl: u64,
    nle: u64,
    nos: u64,
    tnos: u64,
    params: u64,
    hor_d: u64,
    hor_t: u64,
    hon_d: u64,
    hon_t: u64,
}

fn goldens() -> Vec<Golden> {
    vec![
        Golden {
            name: "foo (worked example)",
            source: EXAMPLE_SOURCE,
            index: 0,
            loc: 6, tloc: 6, lloc: 5, tlloc: 5, cloc: 1, tcloc: 1, dloc: 0,
            mccc: 1, nl: 0, nle: 0, nos: 3, tnos: 3, params: 1,
            hor_d: 10, hor_t: 16, hon_d: 5, hon_t: 8,
        },
        Golden {
            name: "empty body",
            source: "function e(){}",
            index: 0,
            loc: 1, tloc: 1, lloc: 1, tlloc: 1, cloc: 0, tcloc: 0, dloc: 0,
            mccc: 1, nl: 0, nle: 0, nos: 0, tnos: 0, params: 0,
            hor_d: 5, hor_t: 5, hon_d: 0, hon_t: 0,
        },
        Golden {
            name: "assigned arrow",
            source: "const f = (x) => x + 1;",
            index: 0,
            loc: 1, tloc: 1, lloc: 1, tlloc: 1, cloc: 0, tcloc: 0, dloc: 0,
            mccc: 1, nl: 0, nle: 0, nos: 0, tnos: 0, params: 1,
            hor_d: 4, hor_t: 4, hon_d: 2, hon_t: 3,
        },
        Golden {
            name: "if branch",
            source: "function max(a, b) {\n  if (a > b) {\n    return a;\n  }\n  return b;\n}",
            index: 0,
            loc: 6, tloc: 6, lloc: 6, tlloc: 6, cloc: 0, tcloc: 0, dloc: 0,
            mccc: 2, nl: 1, nle: 1, nos: 3, tnos: 3, params: 2,
            hor_d: 10, hor_t: 16, hon_d: 2, hon_t: 6,
        },
        Golden {
            name: "for loop with doc comment",
            source: "/* doubles each\n   entry */\nfunction scale(xs) {\n  for (var i = 0; i < xs.length; i++) {\n    xs[i] = xs[i] * 2;\n  }\n  return xs;\n}",
            index: 0,
            loc: 6, tloc: 6, lloc: 6, tlloc: 6, cloc: 0, tcloc: 0, dloc: 2,
            mccc: 2, nl: 1, nle: 1, nos: 3, tnos: 3, params: 1,
            hor_d: 16, hor_t: 26, hon_d: 5, hon_t: 13,
        },
        Golden {
            name: "closure outer",
            source: "function make() {\n  var n = 0;\n  return function step() {\n    n = n + 1;\n    return n;\n  };\n}",
            index: 0,
            loc: 7, tloc: 11, lloc: 7, tlloc: 11, cloc: 0, tcloc: 0, dloc: 0,
            mccc: 1, nl: 0, nle: 0, nos: 4, tnos: 6, params: 0,
            hor_d: 10, hor_t: 20, hon_d: 3, hon_t: 6,
        },
        Golden {
            name: "closure inner",
            source: "function make() {\n  var n = 0;\n  return function step() {\n    n = n + 1;\n    return n;\n  };\n}",
            index: 1,
            loc: 4, tloc: 4, lloc: 4, tlloc: 4, cloc: 0, tcloc: 0, dloc: 0,
            mccc: 1, nl: 0, nle: 0, nos: 2, tnos: 2, params: 0,
            hor_d: 9, hor_t: 10, hon_d: 2, hon_t: 4,
        },
        Golden {
            name: "method with else-if and value keywords",
            source: "var obj = {\n  check(v) {\n    if (v === null) {\n      return false;\n    } else if (v > 10) {\n      return true;\n    }\n    return this.flag;\n  }\n};",
            index: 0,
            loc: 8, tloc: 8, lloc: 8, tlloc: 8, cloc: 0, tcloc: 0, dloc: 0,
            mccc: 3, nl: 1, nle: 1, nos: 5, tnos: 5, params: 1,
            hor_d: 11, hor_t: 24, hon_d: 8, hon_t: 10,
        },
        Golden {
            name: "switch with line comment",
            source: "function kind(x) {\n  // classify\n  switch (x) {\n    case 1:\n      return 'one';\n    case 2:\n      return 'two';\n    default:\n      return 'many';\n  }\n}",
            index: 0,
            loc: 11, tloc: 11, lloc: 10, tlloc: 10, cloc: 1, tcloc: 1, dloc: 0,
            mccc: 3, nl: 1, nle: 1, nos: 4, tnos: 4, params: 1,
            hor_d: 11, hor_t: 22, hon_d: 6, hon_t: 7,
        },
        Golden {
            name: "while with regex and &&",
            source: "function strip(s) {\n  while (s && /^\\s/.test(s)) {\n    s = s.slice(1);\n  }\n  return s;\n}",
            index: 0,
            loc: 6, tloc: 6, lloc: 6, tlloc: 6, cloc: 0, tcloc: 0, dloc: 0,
            mccc: 3, nl: 1, nle: 1, nos: 3, tnos: 3, params: 1,
            hor_d: 11, hor_t: 21, hon_d: 5, hon_t: 10,
        },
        Golden {
            name: "ternary with template",
            source: "function tag(name) {\n  var cls = name ? 'hot' : 'cold';\n  return `<i class=\"${cls}\">` + name;\n}",
            index: 0,
            loc: 4, tloc: 4, lloc: 4, tlloc: 4, cloc: 0, tcloc: 0, dloc: 0,
            mccc: 2, nl: 0, nle: 0, nos: 2, tnos: 2, params: 1,
            hor_d: 12, hor_t: 13, hon_d: 6, hon_t: 9,
        },
    ]
}

fn assert_golden(g: &Golden, m: &MetricVector) {
    let ctx = g.name;
    assert_eq!(m.loc, g.loc, "{ctx}: LOC");
    assert_eq!(m.tloc, g.tloc, "{ctx}: TLOC");
    assert_eq!(m.lloc, g.lloc, "{ctx}: LLOC");
    assert_eq!(m.tlloc, g.tlloc, "{ctx}: TLLOC");
    assert_eq!(m.cloc, g.cloc, "{ctx}: CLOC");
    assert_eq!(m.tcloc, g.tcloc, "{ctx}: TCLOC");
    assert_eq!(m.dloc, g.dloc, "{ctx}: DLOC");
    assert_eq!(m.mccc, g.mccc, "{ctx}: McCC");
    assert_eq!(m.cycl, g.mccc, "{ctx}: CYCL");
    assert_eq!(m.nl, g.nl, "{ctx}: NL");
    assert_eq!(m.nle, g.nle, "{ctx}: NLE");
    assert_eq!(m.nos, g.nos, "{ctx}: NOS");
    assert_eq!(m.tnos, g.tnos, "{ctx}: TNOS");
    assert_eq!(m.numpar, g.params, "{ctx}: NUMPAR");
    assert_eq!(m.params, g.params, "{ctx}: PARAMS");
    assert_eq!(m.hor_d, g.hor_d, "{ctx}: HOR_D");
    assert_eq!(m.hor_t, g.hor_t, "{ctx}: HOR_T");
    assert_eq!(m.hon_d, g.hon_d, "{ctx}: HON_D");
    assert_eq!(m.hon_t, g.hon_t, "{ctx}: HON_T");

    // Clone metrics are out of scope and must be zero.
    assert_eq!(m.cc, 0.0, "{ctx}: CC");
    assert_eq!(m.ccl, 0, "{ctx}: CCL");
    assert_eq!(m.cco, 0, "{ctx}: CCO");
    assert_eq!(m.ci, 0, "{ctx}: CI");
    assert_eq!(m.clc, 0.0, "{ctx}: CLC");
    assert_eq!(m.ldc, 0, "{ctx}: LDC");

    // Derived values recomputed independently from the hand counts.
    let hlen = g.hor_t + g.hon_t;
    let hvoc = g.hor_d + g.hon_d;
    assert_eq!(m.hlen, hlen, "{ctx}: HLEN");
    assert_eq!(m.hvoc, hvoc, "{ctx}: HVOC");
    let hvol = if hvoc == 0 {
        0.0
    } else {
        hlen as f64 * (hvoc as f64).log2()
    };
    let hdiff = if g.hon_d == 0 {
        0.0
    } else {
        g.hor_d as f64 / 2.0 * (g.hon_t as f64 / g.hon_d as f64)
    };
    assert!(
        (m.hvol - hvol).abs() < 1e-9,
        "{ctx}: HVOL {} vs {hvol}",
        m.hvol
    );
    assert!((m.hdiff - hdiff).abs() < 1e-12, "{ctx}: HDIFF");
    assert!((m.heff - hdiff * hvol).abs() < 1e-9, "{ctx}: HEFF");
    assert!((m.htime - hdiff * hvol / 18.0).abs() < 1e-9, "{ctx}: HTIME");
    assert!((m.hbugs - hvol / 3000.0).abs() < 1e-12, "{ctx}: HBUGS");

    let cd = if g.cloc + g.lloc == 0 {
        0.0
    } else {
        g.cloc as f64 / (g.cloc + g.lloc) as f64
    };
    let tcd = if g.tcloc + g.tlloc == 0 {
        0.0
    } else {
        g.tcloc as f64 / (g.tcloc + g.tlloc) as f64
    };
    assert!((m.cd - cd).abs() < 1e-12, "{ctx}: CD");
    assert!((m.tcd - tcd).abs() < 1e-12, "{ctx}: TCD");
    let dens = if g.lloc == 0 {
        0.0
    } else {
        g.mccc as f64 / g.lloc as f64
    };
    assert!((m.cycl_dens - dens).abs() < 1e-12, "{ctx}: CYCL_DENS");
}

#[test]
fn criterion_8_metric_golden_suite() {
    let goldens = goldens();
    assert!(goldens.len() >= 10);
    for g in &goldens {
        let analysis = analyze_source(g.source, "golden.js").unwrap();
        assert!(
            analysis.functions.len() > g.index,
            "{}: function {} not extracted",
            g.name,
            g.index
        );
        assert_golden(g, &analysis.metrics[g.index]);
    }

    // Halstead identities on 1000 fuzzed token streams.
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let words = [
        "a", "bb", "count", "x1", "if", "for", "return", "true", "null", "var",
    ];
    let puncts = ["+", "-", "(", ")", "{", "}", ";", ",", "==", "&&", "=", "."];
    for _ in 0..1000 {
        let len = rng.random_range(0..120);
        let tokens: Vec<Token> = (0..len)
            .map(|i| {
                let (kind, text) = match rng.random_range(0..6) {
                    0 => (
                        TokenKind::Identifier,
                        words[rng.random_range(0..words.len())].to_string(),
                    ),
                    1 => {
                        let w = words[rng.random_range(0..words.len())];
                        if jsvuln_core::js::lexer::is_keyword(w) {
                            (TokenKind::Keyword, w.to_string())
                        } else {
                            (TokenKind::Identifier, w.to_string())
                        }
                    }
                    2 => (
                        TokenKind::Punctuator,
                        puncts[rng.random_range(0..puncts.len())].to_string(),
                    ),
                    3 => (TokenKind::Number, rng.random_range(0..50).to_string()),
                    4 => (TokenKind::String, format!("'s{}'", rng.random_range(0..9))),
                    _ => (TokenKind::CommentLine, "// noise".to_string()),
                };
                Token {
                    kind,
                    text,
                    line: (i + 1) as u32,
                    column: 1,
                    end_line: (i + 1) as u32,
                    end_col: 1,
                }
            })
            .collect();
        let counts = halstead_counts(&tokens);
        let (hlen, hvoc, hdiff, hvol, heff, htime, hbugs) = halstead_derive(&counts);
        assert_eq!(hlen, counts.total_operators + counts.total_operands);
        assert_eq!(hvoc, counts.distinct_operators + counts.distinct_operands);
        assert!((heff - hdiff * hvol).abs() < 1e-9);
        assert!((htime - heff / 18.0).abs() < 1e-12);
        assert!((hbugs - hvol / 3000.0).abs() < 1e-12);
    }
    pass(8, "metric golden suite + halstead identities");
}

// -------------------------------------------------------------------------
// 9. Adaptive DNN schedule against an independent simulator
// -------------------------------------------------------------------------

/// Scripted trainable whose dev F comes from a rigged sequence; state ids
/// make restores observable.
struct ScriptedModel {
    script: Vec<f64>,
    evals: usize,
    epochs_run: usize,
    state_id: usize,
    lr_used: Vec<f64>,
}

impl AdaptiveTrainable for ScriptedModel {
    type Snapshot = usize;
    fn snapshot(&self) -> usize {
        self.state_id
    }
    fn restore(&mut self, s: &usize) {
        self.state_id = *s;
    }
    fn run_epoch(&mut self, lr: f64) {
        self.lr_used.push(lr);
        self.epochs_run += 1;
        self.state_id = self.epochs_run;
    }
    fn dev_f_measure(&mut self) -> f64 {
        let f = if self.evals == 0 {
            0.0
        } else {
            self.script[self.evals - 1]
        };
        self.evals += 1;
        f
    }
}

/// Independent simulation of the miss/halve/restore/stop-at-4 protocol.
struct SimStep {
    improved: bool,
    lr_used: f64,
    lr_after: f64,
    misses: u32,
}

fn simulate_schedule(script: &[f64], initial_lr: f64, max_misses: u32) -> (Vec<SimStep>, usize) {
    let mut best_f = 0.0f64;
    let mut best_state = 0usize;
    let mut lr = initial_lr;
    let mut misses = 0u32;
    let mut steps = Vec::new();
    for (i, &f) in script.iter().enumerate() {
        let lr_used = lr;
        let state = i + 1;
        let improved = f > best_f;
        if improved {
            best_f = f;
            best_state = state;
            misses = 0;
        } else {
            lr /= 2.0;
            misses += 1;
        }
        steps.push(SimStep {
            improved,
            lr_used,
            lr_after: lr,
            misses,
        });
        if misses >= max_misses {
            break;
        }
    }
    (steps, best_state)
}

#[test]
fn criterion_9_adaptive_schedule_matches_simulator() {
    // Rigged sequence: improve, miss, miss, improve, then four misses.
    let script = vec![0.50, 0.40, 0.45, 0.70, 0.69, 0.70, 0.65, 0.60];
    let (sim_steps, sim_best_state) = simulate_schedule(&script, 1.0, 4);

    let mut model = ScriptedModel {
        script: script.clone(),
        evals: 0,
        epochs_run: 0,
        state_id: 0,
        lr_used: vec![],
    };
    let steps: Vec<ScheduleStep> = run_adaptive(&mut model, 1.0, 4, 100);

    assert_eq!(steps.len(), sim_steps.len(), "step count");
    for (real, sim) in steps.iter().zip(&sim_steps) {
        assert_eq!(real.improved, sim.improved, "epoch {}", real.epoch);
        assert_eq!(real.lr_after, sim.lr_after, "epoch {}", real.epoch);
        assert_eq!(real.consecutive_misses, sim.misses, "epoch {}", real.epoch);
    }
    assert_eq!(
        model.lr_used,
        sim_steps.iter().map(|s| s.lr_used).collect::<Vec<_>>()
    );
    // Terminates at exactly four consecutive misses and returns the best
    // checkpoint (the last improvement).
    assert_eq!(steps.last().unwrap().consecutive_misses, 4);
    assert_eq!(model.state_id, sim_best_state);
    assert_eq!(sim_best_state, 4);
    // Six misses in total, each halving once: final lr = 1/2^6.
    assert_eq!(steps.last().unwrap().lr_after, 1.0 / 64.0);

    pass(9, "adaptive schedule vs scripted oracle");
}

// -------------------------------------------------------------------------
// 10. Offline fixture corpus end-to-end
// -------------------------------------------------------------------------

#[test]
fn criterion_10_offline_pipeline_golden() {
    let fixtures = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/pipeline");
    let tmp = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "seed": 42,
        "ingest": [
            { "source": "nsp", "input": fixtures.join("advisories/nsp.json") },
            { "source": "snyk", "input": fixtures.join("advisories/snyk") }
        ],
        "resolve": {
            "mode": "fixture",
            "fixtures": fixtures.join("github"),
            "decisions": fixtures.join("decisions.json")
        },
        "snapshots": fixtures.join("snapshots"),
        "out_dir": tmp.path().join("build"),
        "eval": { "algorithms": ["knn", "tree", "logistic", "bayes"], "rand_check": true }
    });
    let config_path = tmp.path().join("config.json");
    fs::write(&config_path, serde_json::to_string_pretty(&config).unwrap()).unwrap();

    let out = Command::new(env!("CARGO_BIN_EXE_jsvuln"))
        .args(["run", "--config"])
        .arg(&config_path)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "pipeline failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let produced = fs::read_to_string(tmp.path().join("build/dataset.csv")).unwrap();
    let golden = fs::read_to_string(fixtures.join("golden/dataset.csv")).unwrap();
    assert_eq!(produced, golden, "dataset.csv must match the golden file");

    // Corpus shape: >= 3 advisories, >= 2 multi-commit fixes, >= 1
    // issue-mediated fix.
    let resolutions: Vec<serde_json::Value> = ["nsp_118", "nsp_121", "snyk_SNYK-JS-MODC-10001"]
        .iter()
        .map(|stem| {
            serde_json::from_str(
                &fs::read_to_string(tmp.path().join(format!("build/resolutions/{stem}.json")))
                    .unwrap(),
            )
            .unwrap()
        })
        .collect();
    assert!(resolutions.len() >= 3);
    let multi_commit = resolutions
        .iter()
        .filter(|r| r["fixing_commits"].as_array().unwrap().len() >= 2)
        .count();
    assert!(multi_commit >= 2, "need >= 2 multi-commit fixes");
    assert!(
        resolutions
            .iter()
            .any(|r| r["advisory_id"].as_str().unwrap().starts_with("snyk:")),
        "the issue-mediated advisory must resolve"
    );

    pass(10, "offline fixture pipeline, golden CSV");
}
