//! Compare sharded Monte Carlo and batch bound evaluation with and without
//! rayon. Run with `cargo bench` (parallel) or
//! `cargo bench --no-default-features` for the sequential-only baseline.

use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use kmreg::bounds::{rate_report, ScheduleSpec};
use kmreg::rng::RngStream;
use kmreg::stochastic::simulate_walk_nonneg_with;

fn bench_walk(c: &mut Criterion) {
    let sched = ScheduleSpec::UniformRandom { len: 30, seed: 9 }.build().unwrap();
    let mut group = c.benchmark_group("simulate_walk_nonneg");
    group.bench_function("serial", |b| {
        b.iter(|| {
            simulate_walk_nonneg_with(
                black_box(sched.alphas()),
                30,
                200_000,
                RngStream::new(1),
                false,
            )
        })
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        b.iter(|| {
            simulate_walk_nonneg_with(
                black_box(sched.alphas()),
                30,
                200_000,
                RngStream::new(1),
                true,
            )
        })
    });
    group.finish();
}

fn bench_rate_batch(c: &mut Criterion) {
    let scheds: Vec<_> = (0..64u64)
        .map(|seed| ScheduleSpec::UniformRandom { len: 50, seed }.build().unwrap())
        .collect();
    let mut group = c.benchmark_group("rate_report_batch");
    group.bench_function("serial", |b| {
        b.iter(|| scheds.iter().map(|s| rate_report(s, 50).product).sum::<f64>())
    });
    #[cfg(feature = "parallel")]
    group.bench_function("parallel", |b| {
        use rayon::prelude::*;
        b.iter(|| scheds.par_iter().map(|s| rate_report(s, 50).product).sum::<f64>())
    });
    group.finish();
}

criterion_group!(benches, bench_walk, bench_rate_batch);
criterion_main!(benches);
