use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rtmpc::linalg::symmetric_extremes;
use rtmpc::{fast_gradient, run_scenario, Engine, Preset, ScenarioConfig};

fn config(horizon: usize) -> ScenarioConfig {
    let mut cfg = Preset::Fig2.config();
    cfg.cost.horizon = horizon;
    cfg.monitor.q_max = cfg.monitor.q_max.min(horizon);
    cfg.monitor.q_init = cfg.monitor.q_init.min(horizon);
    cfg
}

fn solver(c: &mut Criterion) {
    let mut group = c.benchmark_group("fast_gradient");
    for horizon in [100, 200] {
        let cfg = config(horizon);
        let engine = Engine::new(cfg).unwrap();
        let (p0, x0, k0) = engine.next_instance().unwrap();
        let (cost, sc) = (engine.cost(), engine.solver());
        for q in [10, 50] {
            group.bench_with_input(BenchmarkId::new(format!("N{horizon}"), q), &q, |b, &q| {
                b.iter(|| fast_gradient(cost, black_box(&x0), k0, &p0, q, sc).unwrap())
            });
        }
    }
    group.finish();
}

fn curvature(c: &mut Criterion) {
    let mut group = c.benchmark_group("curvature");
    group.sample_size(10);
    for horizon in [100, 200] {
        let cost = config(horizon).build_cost().unwrap();
        let h = cost.hessian().clone();
        group.bench_with_input(BenchmarkId::new("extremes", horizon), &h, |b, h| {
            b.iter(|| symmetric_extremes(black_box(h)).unwrap())
        });
        group.bench_with_input(BenchmarkId::new("condense", horizon), &horizon, |b, &n| {
            let cfg = config(n);
            b.iter(|| cfg.build_cost().unwrap())
        });
    }
    group.finish();
}

fn closed_loop(c: &mut Criterion) {
    let mut group = c.benchmark_group("closed_loop");
    group.sample_size(10);
    let mut cfg = Preset::Fig8.config();
    cfg.run.duration = 600;
    group.bench_function("fig8_600_periods", |b| b.iter(|| run_scenario(black_box(&cfg)).unwrap()));
    group.finish();
}

criterion_group!(benches, solver, curvature, closed_loop);
criterion_main!(benches);
