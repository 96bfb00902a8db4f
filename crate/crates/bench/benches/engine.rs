use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use banditvar::sim::{simulate, TrialSeeds};
use banditvar::{
    make_gap_instance, run_experiment, solve_fluid, ArmDistribution, BanditInstance,
    ExplorationFunction, PolicySpec,
};

fn single_trial(c: &mut Criterion) {
    let horizon = 4096;
    let inst = make_gap_instance(0.05).unwrap();
    let mut group = c.benchmark_group("trial");
    group.throughput(Throughput::Elements(horizon));
    for spec in [
        PolicySpec::ucbf(ExplorationFunction::power_log(0.25)),
        PolicySpec::Ucb1,
        PolicySpec::TsGaussian,
        PolicySpec::RoundRobin,
    ] {
        let seeds = TrialSeeds::derive(1, 2);
        group.bench_function(BenchmarkId::new(spec.name(), horizon), |b| {
            b.iter(|| simulate(&inst, black_box(&spec), horizon, &seeds, |_, _| {}).unwrap())
        });
    }
    let coins = BanditInstance::new(vec![ArmDistribution::bernoulli(0.5).unwrap(); 2]);
    let seeds = TrialSeeds::derive(1, 2);
    group.bench_function(BenchmarkId::new("ts_bernoulli", horizon), |b| {
        b.iter(|| simulate(&coins, &PolicySpec::TsBernoulli, horizon, &seeds, |_, _| {}).unwrap())
    });
    group.finish();
}

fn experiment(c: &mut Criterion) {
    let inst = make_gap_instance(0.05).unwrap();
    let spec = PolicySpec::ucbf(ExplorationFunction::power_log(0.0));
    let mut group = c.benchmark_group("experiment");
    group.sample_size(10);
    group.throughput(Throughput::Elements(256 * 1024));
    group.bench_function("ucbf_T1024_x256", |b| {
        b.iter(|| run_experiment(&inst, &spec, 1024, 256, black_box(3)).unwrap())
    });
    group.finish();
}

fn fluid(c: &mut Criterion) {
    let means: Vec<f64> = (0..8).map(|i| -0.1 * i as f64).collect();
    let f = ExplorationFunction::ucb1();
    c.bench_function("fluid_K8", |b| {
        b.iter(|| {
            let t = black_box(65_536.0);
            solve_fluid(&means, f.eval(t), t).unwrap()
        })
    });
}

criterion_group!(benches, single_trial, experiment, fluid);
criterion_main!(benches);
