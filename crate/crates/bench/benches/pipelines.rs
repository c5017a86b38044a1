use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use warpbench_bench::{cone, perturbed};
use warpbench_core::ledger::{dominance_check, Calibration};
use warpbench_core::offcenter::{ball_volume, distance_field, MeshSpec};
use warpbench_core::radial::{gauge_solve, green_pole, kato_constant};
use warpbench_core::transport::{run_transport, SamplingPolicy};
use warpbench_core::{GridSpec, WarpingProfile, WeightedBallProblem};

fn radial(c: &mut Criterion) {
    let p = WarpingProfile::standard_perturbed();
    let g = GridSpec::for_profile(&p);
    c.bench_function("build_manifold/perturbed", |b| {
        b.iter(|| warpbench_core::build_manifold(3, black_box(p.clone()), g).unwrap())
    });
    let m = perturbed();
    c.bench_function("green_pole/perturbed", |b| b.iter(|| green_pole(black_box(&m)).unwrap()));
    c.bench_function("kato_constant/perturbed", |b| b.iter(|| kato_constant(black_box(&m)).unwrap()));
    c.bench_function("gauge_solve/perturbed", |b| b.iter(|| gauge_solve(black_box(&m)).unwrap()));
}

fn transport(c: &mut Criterion) {
    let m = cone();
    let p = WeightedBallProblem::unweighted(m, 1.0).unwrap();
    let mut g = c.benchmark_group("transport");
    g.sample_size(10);
    g.bench_function("run_transport/cone/32x512", |b| {
        b.iter(|| run_transport(black_box(&p), SamplingPolicy::default()).unwrap())
    });
    g.finish();
}

fn offcenter(c: &mut Criterion) {
    let m = cone();
    let mut g = c.benchmark_group("offcenter");
    g.sample_size(10);
    g.bench_function("distance_field/cone/256x128", |b| {
        b.iter(|| distance_field(&m, 1.0, black_box(MeshSpec::full(256, 128, 6.0))).unwrap())
    });
    g.bench_function("ball_volume/cone/512x256", |b| b.iter(|| ball_volume(&m, 5.0, black_box(1.0), 512, 256).unwrap()));
    g.finish();
}

fn ledger(c: &mut Criterion) {
    let m = perturbed();
    let mut g = c.benchmark_group("ledger");
    g.sample_size(10);
    g.bench_function("dominance_check/perturbed", |b| {
        b.iter(|| dominance_check(black_box(&m), &Calibration::default()).unwrap())
    });
    g.finish();
}

criterion_group!(benches, radial, transport, offcenter, ledger);
criterion_main!(benches);
