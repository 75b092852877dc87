use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use dmoc_bench::peak_profiles;
use dmoc_core::baselines::kmeans;
use dmoc_core::engine::run_dmoc;
use dmoc_core::pcs::{epigraph_lp_representative, solve_representative, water_fill};
use dmoc_core::rtp::{generate_rtp_scenario, RtpScenarioParams};
use dmoc_core::{AssignmentRule, EngineConfig, Norm, PcsMetric, PcsParams, PcsSolverConfig, RtpParams, SolverMethod};

fn representatives(c: &mut Criterion) {
    let params = PcsParams::uniform(24, Norm::Infinity, 30.0, 3.0).unwrap();
    let data = peak_profiles(120, 24, 1);
    let members: Vec<usize> = (0..data.len()).collect();
    c.bench_function("epigraph_lp_120x24", |b| {
        b.iter(|| epigraph_lp_representative(black_box(&data), &members, &params).unwrap())
    });
    let smoothed = PcsSolverConfig { method: SolverMethod::ProjectedSubgradient, smoothing_mu: 1.0, ..Default::default() };
    c.bench_function("smoothed_gradient_120x24", |b| {
        b.iter(|| solve_representative(black_box(&data), &members, &params, &smoothed).unwrap())
    });
    let p2 = PcsParams { norm: Norm::Finite(2.0), ..params.clone() };
    c.bench_function("p2_gradient_120x24", |b| {
        b.iter(|| solve_representative(black_box(&data), &members, &p2, &PcsSolverConfig::default()).unwrap())
    });
    c.bench_function("water_fill_24", |b| b.iter(|| water_fill(black_box(data.sample(0)), &params).unwrap()));
}

fn clustering(c: &mut Criterion) {
    let data = peak_profiles(365, 24, 2);
    let metric = PcsMetric::new(
        PcsParams::uniform(24, Norm::Infinity, 30.0, 3.0).unwrap(),
        PcsSolverConfig::default(),
        AssignmentRule::Exact,
    );
    let mut group = c.benchmark_group("clustering");
    group.sample_size(10);
    group.bench_function("dmoc_pcs_365x24_m5", |b| {
        b.iter(|| run_dmoc(&metric, black_box(&data), &EngineConfig::new(5, 3)).unwrap())
    });
    group.bench_function("kmeans_365x24_m5", |b| b.iter(|| kmeans(black_box(&data), 5, 3, 300).unwrap()));
    let scenario = generate_rtp_scenario(&RtpScenarioParams::default()).unwrap();
    let rtp = RtpParams::default();
    group.bench_function("dmoc_rtp_365_m10", |b| {
        b.iter(|| run_dmoc(&rtp, black_box(&scenario), &EngineConfig::new(10, 3)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, representatives, clustering);
criterion_main!(benches);
