//! Ensemble evolution and optical propagation, data-parallel against the
//! sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spinlight::exec;
use spinlight::harness::{optics_stage, squeeze_stage, OpticsOptions};
use spinlight::SimulationConfig;

fn config() -> SimulationConfig {
    SimulationConfig {
        nz: 64,
        dz: 0.16,
        squeeze_time: 0.2,
        n_traj: 64,
        ..Default::default()
    }
}

fn modes(c: &mut Criterion) {
    let cfg = config();
    let ckpt = squeeze_stage(&cfg).unwrap().checkpoint;
    let opts = OpticsOptions {
        cross_check: 0,
        ..Default::default()
    };
    let mut group = c.benchmark_group("ensemble");
    group.sample_size(10);
    for (name, sequential) in [("parallel", false), ("sequential", true)] {
        exec::force_sequential(sequential);
        group.bench_with_input(BenchmarkId::new("squeeze", name), &cfg, |b, cfg| {
            b.iter(|| squeeze_stage(cfg).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("optics", name), &ckpt, |b, ckpt| {
            b.iter(|| optics_stage(ckpt, opts).unwrap())
        });
    }
    exec::force_sequential(false);
    group.finish();
}

criterion_group!(benches, modes);
criterion_main!(benches);
