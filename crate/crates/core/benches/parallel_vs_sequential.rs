use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use cbi_core::certify::{coverage_monte_carlo, CoverageSpec};
use cbi_core::chain::{chain_estimate_with, ChainParams, EstimatorMode, HeraldFilter};
use cbi_core::quantum::TwoQubitState;
use cbi_core::schedule::LocalWeightSchedule;
use cbi_core::simulator::{CollisionSpec, HeraldSpec, ProtocolSpec, Simulation, SourceModel};
use cbi_core::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn simulation() -> Simulation {
    Simulation {
        params: ChainParams::with_order(6).unwrap(),
        source: SourceModel::ideal(TwoQubitState::phi_plus()),
        protocol: ProtocolSpec::default(),
        herald: Some(HeraldSpec::default()),
        collisions: CollisionSpec::default(),
        seed: 1,
    }
}

fn generate(c: &mut Criterion) {
    let sim = simulation();
    let mut g = c.benchmark_group("simulate_139800_trials");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| b.iter(|| sim.run(exec).unwrap()));
    }
    g.finish();
}

fn estimate(c: &mut Criterion) {
    let sim = simulation();
    let log = sim.run(Execution::Parallel).unwrap();
    let mut g = c.benchmark_group("estimate_139800_trials");
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                chain_estimate_with(&log, &sim.params, EstimatorMode::Correlation, HeraldFilter::HeraldedOnly, exec)
                    .unwrap()
            })
        });
    }
    g.finish();
}

fn coverage(c: &mut Criterion) {
    let spec = CoverageSpec::new(LocalWeightSchedule::constant(0.5).unwrap(), 500, 6, 0.05, 200);
    let mut g = c.benchmark_group("coverage_200_runs");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| coverage_monte_carlo(&spec, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, generate, estimate, coverage);
criterion_main!(benches);
