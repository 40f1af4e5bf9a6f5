use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use maxrel::oracle::{enumerate_and_minimize, value_iterate_oe};
use maxrel::{
    compute_largest_absorbing, simulate_survival, solve, BigRational, OracleOptions, SolveOptions,
};
use maxrel_bench::{maintenance, maintenance_keep_policy, random_models};

fn bench_maintenance(c: &mut Criterion) {
    let float = maintenance::<f64>();
    let exact = maintenance::<BigRational>();
    let opts = SolveOptions::default();
    c.bench_function("solve/maintenance/float", |b| {
        b.iter(|| solve(black_box(&float), &opts).unwrap())
    });
    c.bench_function("solve/maintenance/exact", |b| {
        b.iter(|| solve(black_box(&exact), &opts).unwrap())
    });
}

fn bench_random(c: &mut Criterion) {
    let models = random_models(64, 7);
    let opts = SolveOptions::default();
    c.bench_function("absorbing/random64", |b| {
        b.iter(|| {
            for m in &models {
                black_box(compute_largest_absorbing(m));
            }
        })
    });
    c.bench_function("solve/random64", |b| {
        b.iter(|| {
            for m in &models {
                black_box(solve(m, &opts).unwrap());
            }
        })
    });
    c.bench_function("oracle/value_iteration/random64", |b| {
        b.iter(|| {
            for m in &models {
                black_box(value_iterate_oe(m, 1e-12, 200_000).unwrap());
            }
        })
    });
    let oracle = OracleOptions::default();
    c.bench_function("oracle/enumeration/random64", |b| {
        b.iter(|| {
            for m in &models {
                black_box(enumerate_and_minimize(m, &oracle).unwrap());
            }
        })
    });
}

fn bench_simulation(c: &mut Criterion) {
    let m = maintenance::<f64>();
    let g = maintenance_keep_policy(&m);
    let start = m.state_id("(2,2)").unwrap();
    let mut group = c.benchmark_group("simulate");
    group.sample_size(10);
    group.bench_function("maintenance/h200/t100k", |b| {
        b.iter(|| simulate_survival(&m, &g, start, 200, 100_000, 1).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_maintenance, bench_random, bench_simulation);
criterion_main!(benches);
