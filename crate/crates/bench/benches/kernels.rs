use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use fairscale::data::{generate_synthetic, SynthConfig};
use fairscale::harness::{prepare, train_on, ExperimentConfig, TrainSettings};
use fairscale::{auc, fis_weights};
use fairscale_bench::{auc_input, fis_input};

fn bench_auc(c: &mut Criterion) {
    let mut group = c.benchmark_group("auc");
    for n in [1_000, 100_000] {
        let (scores, labels) = auc_input(n, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| auc(black_box(&scores), black_box(&labels)).unwrap())
        });
    }
    group.finish();
}

fn bench_fis_weights(c: &mut Criterion) {
    let mut group = c.benchmark_group("fis_weights");
    for batch in [10, 256] {
        let (state, items, losses) = fis_input(batch, 3, 2);
        group.bench_with_input(BenchmarkId::from_parameter(batch), &batch, |b, _| {
            b.iter(|| {
                fis_weights(black_box(&state), black_box(&items), black_box(&losses)).unwrap()
            })
        });
    }
    group.finish();
}

fn bench_epoch(c: &mut Criterion) {
    let cfg = ExperimentConfig {
        training: TrainSettings {
            epochs: 1,
            ..TrainSettings::default()
        },
        ..ExperimentConfig::default()
    };
    let ds = generate_synthetic(&SynthConfig::disparity_testbed(0)).unwrap();
    let data = prepare(&ds, &cfg, 0).unwrap();
    c.bench_function("fis_epoch_testbed", |b| {
        b.iter(|| train_on(black_box(&cfg), &data, 0).unwrap())
    });
}

criterion_group!(benches, bench_auc, bench_fis_weights, bench_epoch);
criterion_main!(benches);
