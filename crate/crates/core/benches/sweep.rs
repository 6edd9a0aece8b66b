use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use semvr::channel::ChannelConfig;
use semvr::harness::{run_experiment_with, ExperimentConfig};
use semvr::parallel::Execution;
use semvr::protocol::{run_session, MecServer, Scheme, SessionConfig};
use semvr::scene::{generate_scene, SceneConfig};

fn small_sweep() -> ExperimentConfig {
    ExperimentConfig {
        snr_grid: vec![-6.0, 0.0, 6.0],
        dbf_proportions: vec![0.5, 1.0],
        n_seeds: 2,
        scene: SceneConfig {
            n_frames: 8,
            ..SceneConfig::default()
        },
        ..ExperimentConfig::default()
    }
}

fn bench_sweep(c: &mut Criterion) {
    let cfg = small_sweep();
    let mut group = c.benchmark_group("sweep");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| run_experiment_with(black_box(&cfg), exec).unwrap())
        });
    }
    group.finish();
}

fn bench_session(c: &mut Criterion) {
    let scene = generate_scene(&SceneConfig::default()).unwrap();
    let server = MecServer::single(1, scene, 0);
    let mut group = c.benchmark_group("session");
    group.sample_size(10);
    for scheme in Scheme::ALL {
        let cfg = SessionConfig::new(1, scheme, 0.5, ChannelConfig::new(0.0, 1));
        for exec in [Execution::Sequential, Execution::Parallel] {
            group.bench_function(format!("{scheme}/{exec:?}"), |b| {
                b.iter(|| run_session(&server, None, black_box(&cfg), exec).unwrap())
            });
        }
    }
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_session);
criterion_main!(benches);
