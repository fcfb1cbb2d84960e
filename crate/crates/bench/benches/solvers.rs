use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use hmflow_bench::{coarse_config, linear_trace};
use hmflow_core::blowup::{classify_rate, estimate_from_trace, RateOptions};
use hmflow_core::diagnostics::{energy_dissipation_audit, intersection_series, Reference, DEFAULT_ZERO_TOL};
use hmflow_core::model::FlowParams;
use hmflow_core::pde::{run_flow, StopRule};
use hmflow_core::steady::{shoot_profile, theta_threshold};

fn steady(c: &mut Criterion) {
    let mut g = c.benchmark_group("steady");
    g.bench_function("shoot_profile m=2 r<=50", |b| b.iter(|| shoot_profile(2, black_box(1.0), 50.0, 1e-11).unwrap()));
    g.bench_function("theta_threshold m=3", |b| b.iter(|| theta_threshold(black_box(3), 1e-11).unwrap()));
    g.finish();
}

fn flow(c: &mut Criterion) {
    let mut g = c.benchmark_group("flow");
    g.sample_size(10);
    let stop = StopRule::standard(1.0, 10.0);
    for cells in [128, 256] {
        let cfg = coarse_config(cells);
        g.bench_function(format!("global m=3 b=1 N={cells}"), |b| {
            b.iter(|| run_flow(&FlowParams::flat_linear(3, 1.0, black_box(1.0)), &cfg, &stop).unwrap())
        });
    }
    g.bench_function("blowup m=3 b=3 to m=100 N=128", |b| b.iter(|| linear_trace(3, black_box(3.0), 128, 100.0)));
    g.finish();
}

fn diagnostics(c: &mut Criterion) {
    let global = linear_trace(3, 1.0, 256, 1e3);
    let blowup = linear_trace(3, 3.0, 128, 1e3);
    let mut g = c.benchmark_group("diagnostics");
    g.bench_function("energy audit", |b| b.iter(|| energy_dissipation_audit(black_box(&global))));
    g.bench_function("intersection with pi/2", |b| {
        b.iter(|| intersection_series(black_box(&blowup), Reference::Constant(std::f64::consts::FRAC_PI_2), DEFAULT_ZERO_TOL))
    });
    g.bench_function("blowup fit and rate", |b| {
        b.iter(|| classify_rate(black_box(&blowup), estimate_from_trace(&blowup), None, RateOptions::default()))
    });
    g.finish();
}

criterion_group!(benches, steady, flow, diagnostics);
criterion_main!(benches);
