use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use icuae_bench::{random_batch, random_matrix};
use icuae_core::{build_model, Autoencoder, ModelKind};

const BATCH: usize = 128;

fn bm_matmul(c: &mut Criterion) {
    let mut group = c.benchmark_group("matmul");
    for &(m, k, n) in &[(128, 126, 384), (128, 960, 96), (128, 1920, 192)] {
        let a = random_matrix(m, k, 1);
        let b = random_matrix(k, n, 2);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{m}x{k}x{n}")),
            &(a, b),
            |bch, (a, b)| bch.iter(|| black_box(a.matmul(b).unwrap())),
        );
    }
    group.finish();
}

fn bm_models(c: &mut Criterion) {
    let mut group = c.benchmark_group("loss_and_grads");
    group.sample_size(10);
    for kind in [ModelKind::Dense1, ModelKind::Dense2, ModelKind::Seq] {
        for interval in [4, 32] {
            let model = build_model(kind, interval, 7).unwrap();
            let batch = random_batch(BATCH, interval, 3);
            group.bench_with_input(
                BenchmarkId::new(kind.as_str(), interval),
                &batch,
                |b, batch| b.iter(|| black_box(model.loss_and_grads(batch, false).unwrap())),
            );
        }
    }
    group.finish();

    let mut group = c.benchmark_group("reconstruct");
    group.sample_size(10);
    for kind in [ModelKind::Dense1, ModelKind::Seq] {
        let model = build_model(kind, 32, 7).unwrap();
        let batch = random_batch(BATCH, 32, 3);
        group.bench_function(kind.as_str(), |b| {
            b.iter(|| black_box(model.reconstruct(&batch).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, bm_matmul, bm_models);
criterion_main!(benches);
