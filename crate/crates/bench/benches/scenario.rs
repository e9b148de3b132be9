use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use obata_lab::scenario::{run_with_threads, SCENARIOS};
use obata_lab::{verify_scenario, DiffScheme, ScenarioConfig, VerifyPlan};
use obata_lab_bench::{space, SEED};

fn sweeps(c: &mut Criterion) {
    let scheme = DiffScheme::default();
    let mut group = c.benchmark_group("verify_scenario_50");
    group.sample_size(10);
    for entry in &SCENARIOS {
        let s = space(entry.name);
        let plan = VerifyPlan::new(50, SEED);
        group.bench_function(entry.name, |b| {
            b.iter(|| verify_scenario(black_box(&s), &plan, &scheme).unwrap())
        });
    }
    group.finish();
}

fn threads(c: &mut Criterion) {
    let mut config = ScenarioConfig::new("calabi_cauchy");
    config.samples = 200;
    let mut group = c.benchmark_group("run_calabi_cauchy_200");
    group.sample_size(10);
    for n in [1usize, 2, 4] {
        group.bench_with_input(BenchmarkId::new("threads", n), &n, |b, &n| {
            b.iter(|| run_with_threads(black_box(&config), Some(n)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, sweeps, threads);
criterion_main!(benches);
