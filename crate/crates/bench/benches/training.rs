//! Classifier training and fold-protocol throughput on synthetic data.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jsvuln_core::eval::{resample, FoldPlan, ResamplingSpec};
use jsvuln_core::ml::{train, Algorithm, FeatureMatrix, ModelSpec, ParamValue};

fn synthetic(n: usize, d: usize) -> FeatureMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let shift = if i % 8 == 0 { 2.0 } else { 0.0 };
            (0..d)
                .map(|_| rng.random_range(-1.0..1.0) + shift)
                .collect()
        })
        .collect();
    let labels: Vec<u8> = (0..n).map(|i| u8::from(i % 8 == 0)).collect();
    FeatureMatrix::from_rows(rows, labels).unwrap()
}

fn bench_training(c: &mut Criterion) {
    let data = synthetic(800, 35);
    let idx: Vec<usize> = (0..data.rows()).collect();
    let dev: Vec<usize> = (0..80).collect();
    let mut group = c.benchmark_group("train");
    group.sample_size(10);

    for (name, spec) in [
        (
            "knn_k5",
            ModelSpec::new(Algorithm::Knn).with("k", ParamValue::Int(5)),
        ),
        (
            "tree_depth8",
            ModelSpec::new(Algorithm::Tree).with("max_depth", ParamValue::Int(8)),
        ),
        (
            "forest_20_trees",
            ModelSpec::new(Algorithm::Forest)
                .with("trees", ParamValue::Int(20))
                .with("max_depth", ParamValue::Int(8)),
        ),
        ("logistic", ModelSpec::new(Algorithm::Logistic)),
        ("svm", ModelSpec::new(Algorithm::Svm)),
        ("bayes", ModelSpec::new(Algorithm::Bayes)),
        (
            "dnn_s_small",
            ModelSpec::new(Algorithm::DnnS)
                .with("layers", ParamValue::List(vec![16]))
                .with("epochs", ParamValue::Int(5)),
        ),
    ] {
        group.bench_function(name, |b| {
            b.iter(|| train(black_box(&spec), black_box(&data), &idx, &dev, 42).unwrap())
        });
    }
    group.finish();
}

fn bench_harness(c: &mut Criterion) {
    let data = synthetic(2000, 35);
    let mut group = c.benchmark_group("harness");
    group.bench_function("fold_plan_2000_rows", |b| {
        b.iter(|| FoldPlan::build(black_box(&data.labels), 42).unwrap())
    });
    let idx: Vec<usize> = (0..data.rows()).collect();
    group.bench_function("oversample_full_balance", |b| {
        b.iter(|| {
            resample(
                black_box(&idx),
                &data.labels,
                &ResamplingSpec::over(1.0),
                42,
            )
            .unwrap()
        })
    });
    group.finish();
}

criterion_group!(benches, bench_training, bench_harness);
criterion_main!(benches);
