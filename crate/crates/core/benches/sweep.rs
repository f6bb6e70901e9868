use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use splitdre::experiments::{build_problem, run_experiment_with, ExperimentConfig};
use splitdre::flows::{strang_step, SchemeConfig};
use splitdre::parallel::Executor;
use splitdre::Scheme;

fn small_sweep() -> ExperimentConfig {
    let mut c = ExperimentConfig::desk(2).expect("valid id");
    c.nh_list = vec![16, 64, 128];
    c.nt_list = vec![8, 16, 32, 64];
    c.tau_ref_exponent = 9;
    c.master_exponent = 12;
    c
}

fn sweep(c: &mut Criterion) {
    let config = small_sweep();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for (name, executor) in [("sequential", Executor::sequential()), ("parallel", Executor::new(0))] {
        group.bench_function(BenchmarkId::new(name, executor.jobs()), |b| {
            b.iter(|| run_experiment_with(&config, executor).expect("sweep runs"))
        });
    }
    group.finish();
}

fn step(c: &mut Criterion) {
    let config = small_sweep();
    let scheme = SchemeConfig::new(Scheme::Strang, 64);
    let mut group = c.benchmark_group("strang_step");
    for nh in [64, 256, 1024] {
        let problem = build_problem(&config, nh)
            .and_then(|p| p.modal())
            .expect("problem builds");
        group.bench_function(BenchmarkId::from_parameter(nh), |b| {
            b.iter(|| strang_step(&problem, problem.z0(), 1e-3, &scheme).expect("step"))
        });
    }
    group.finish();
}

criterion_group!(benches, sweep, step);
criterion_main!(benches);
