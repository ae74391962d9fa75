use std::f64::consts::TAU;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use singrad_bench::{cover_field, spiral_field};
use singrad_core::analysis::{ray_crossings, secant_coverage};
use singrad_core::flow::integrate;
use singrad_core::scenarios::{run_scenario, sweep, verify_identities, VerifyConfig};
use singrad_core::{IntegrationOptions, Overrides, ScenarioId};

fn fields(c: &mut Criterion) {
    let spiral = spiral_field();
    let cover = cover_field();
    c.bench_function("xi_eval/blown_down", |b| {
        b.iter(|| spiral.eval(black_box([0.3, -0.2])).unwrap())
    });
    c.bench_function("xi_eval/cover", |b| {
        b.iter(|| cover.eval(black_box([0.4, 0.5])).unwrap())
    });
}

fn integration(c: &mut Criterion) {
    let spiral = spiral_field();
    let opts = IntegrationOptions {
        stop_r_min: 0.5 * (-2.0 * TAU).exp(),
        stop_r_max: 0.99,
        ..Default::default()
    };
    c.bench_function("integrate/two_turns", |b| {
        b.iter(|| integrate(&spiral, black_box([0.5, 0.0]), &opts).unwrap())
    });

    let traj = integrate(&spiral, [0.5, 0.0], &opts).unwrap();
    c.bench_function("analysis/ray_crossings", |b| {
        b.iter(|| ray_crossings(&traj, black_box(0.3)).unwrap())
    });
    c.bench_function("analysis/secant_coverage", |b| {
        b.iter(|| secant_coverage(&traj, [0.0, 0.0], 64).unwrap())
    });
}

fn scenarios(c: &mut Criterion) {
    let mut group = c.benchmark_group("scenario");
    group.sample_size(20);
    for id in [ScenarioId::S3, ScenarioId::S5] {
        group.bench_function(id.code(), |b| {
            b.iter(|| run_scenario(id, &Overrides::default()).unwrap())
        });
    }
    group.bench_function("S3_sweep_8", |b| {
        b.iter(|| sweep(ScenarioId::S3, &Overrides::default(), 8).unwrap())
    });
    group.bench_function("verify_1000", |b| {
        b.iter(|| verify_identities(&VerifyConfig::default()).unwrap())
    });
    group.finish();
}

criterion_group!(benches, fields, integration, scenarios);
criterion_main!(benches);
