use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

use wpcc_bench::scenario_at;
use wpcc_core::config::dbm_to_watts;
use wpcc_core::simulator::{default_tau_grid, estimate_outage, simulate_att, threshold_scan};

fn att(c: &mut Criterion) {
    let sc = scenario_at(30.0);
    let mut g = c.benchmark_group("simulate_att");
    g.sample_size(10);
    g.bench_function("1e5 slots", |b| {
        b.iter(|| simulate_att(&sc.params, dbm_to_watts(5.0), 0.7, 100_000, black_box(1)).unwrap())
    });
    g.finish();
}

fn radiometer(c: &mut Criterion) {
    let sc = scenario_at(30.0);
    let p_s = sc.params.p_max;
    let grid = default_tau_grid(&sc.params, p_s, 201);
    let mut g = c.benchmark_group("radiometer");
    g.sample_size(10);
    g.bench_function("threshold_scan 1e5 x 202", |b| {
        b.iter(|| threshold_scan(&sc.params, p_s, 0.3, &grid, 100_000, black_box(1)).unwrap())
    });
    g.bench_function("estimate_outage 1e5", |b| {
        b.iter(|| estimate_outage(&sc.params, p_s, 100_000, black_box(1)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, att, radiometer);
criterion_main!(benches);
