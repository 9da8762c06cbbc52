use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use recommerce_core::olg::{self, OlgObjective};
use recommerce_core::oracle::{self, GridSpec};
use recommerce_core::{two_period, ModelKind, ModelParams, Regime, SolverOptions};

fn olg_reference() -> ModelParams {
    ModelParams { alpha: 0.95, beta: 0.05, delta: 0.5, ..ModelParams::canonical() }
}

fn analytic(c: &mut Criterion) {
    let p = ModelParams::canonical();
    let q = olg_reference();
    let opts = SolverOptions::default();
    c.bench_function("two_period_solve", |b| {
        b.iter(|| two_period::solve(black_box(&p), Regime::Branded, &opts).unwrap())
    });
    c.bench_function("olg_solve", |b| {
        b.iter(|| olg::optimal_durability_olg(black_box(&q), Regime::Branded, OlgObjective::WithFirstPeriod, &opts).unwrap())
    });
    c.bench_function("olg_candidate_audit", |b| {
        b.iter(|| olg::audit_all_candidates(black_box(&q), 0.1, &opts))
    });
}

fn brute_force(c: &mut Criterion) {
    let p = ModelParams::canonical();
    let grid = GridSpec::new(10.0, 100_000).unwrap();
    let mut g = c.benchmark_group("grid_oracle");
    g.sample_size(20);
    g.bench_function("two_period_1e5", |b| {
        b.iter(|| oracle::grid_argmax_profit(black_box(&p), Regime::Branded, ModelKind::TwoPeriod, &grid))
    });
    g.bench_function("olg_1e5", |b| {
        b.iter(|| oracle::grid_argmax_profit(black_box(&p), Regime::Branded, ModelKind::Olg, &grid))
    });
    g.finish();
}

criterion_group!(benches, analytic, brute_force);
criterion_main!(benches);
