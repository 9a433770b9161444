//! Fixtures and criterion benchmarks for the simulation hot path.

use std::hint::black_box;

use bubblerank::harness::{run_one, RunSettings};
use bubblerank::{AgentKind, ClickModel, Instance, LearnerSettings, RankedList, SimRng};
use criterion::{BenchmarkId, Criterion, Throughput};
use rand::SeedableRng;

const ALPHA: [f64; 10] = [0.9, 0.8, 0.7, 0.6, 0.5, 0.4, 0.3, 0.2, 0.15, 0.1];

/// A K = 10 instance of the given model with adjacent pairs swapped in the
/// initial list.
pub fn fixture(model: &str) -> Instance {
    let alpha = ALPHA.to_vec();
    let chi: Vec<f64> = (0..10).map(|k| 1.0 - 0.07 * k as f64).collect();
    let m = match model {
        "cm" => ClickModel::cascade(alpha.iter().map(|a| a * 0.5).collect()),
        "pbm" => ClickModel::position_based(alpha, chi),
        "dcm" => ClickModel::dependent_click(alpha, vec![0.6; 10]),
        other => panic!("unknown model {other}"),
    }
    .expect("valid fixture model");
    let initial = RankedList::from_labels(&[2, 1, 4, 3, 6, 5, 8, 7, 10, 9]).expect("permutation");
    Instance::new(format!("bench-{model}"), m, initial, 5).expect("valid fixture instance")
}

/// Settings for a run of `horizon` steps with only the final checkpoint.
pub fn settings(horizon: u64) -> RunSettings {
    RunSettings {
        horizon,
        checkpoints: vec![horizon],
        eval_cutoff: None,
        learner: LearnerSettings::default(),
        record_stats: false,
    }
}

fn click_sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_clicks");
    group.throughput(Throughput::Elements(1));
    for model in ["cm", "pbm", "dcm"] {
        let inst = fixture(model);
        let mut rng = SimRng::seed_from_u64(1);
        let mut clicks = vec![false; inst.k()];
        group.bench_function(BenchmarkId::from_parameter(model), |b| {
            b.iter(|| {
                inst.model.sample_clicks_into(black_box(&inst.initial_list), &mut rng, &mut clicks);
                black_box(&clicks);
            })
        });
    }
    group.finish();
}

fn exact_reward(c: &mut Criterion) {
    let mut group = c.benchmark_group("expected_reward");
    for model in ["cm", "pbm", "dcm"] {
        let inst = fixture(model);
        group.bench_function(BenchmarkId::from_parameter(model), |b| {
            b.iter(|| inst.model.expected_reward(black_box(&inst.initial_list), 5))
        });
    }
    group.finish();
}

fn simulation_steps(c: &mut Criterion) {
    const STEPS: u64 = 20_000;
    let mut group = c.benchmark_group("run_one");
    group.throughput(Throughput::Elements(STEPS));
    group.sample_size(20);
    let s = settings(STEPS);
    for model in ["cm", "pbm", "dcm"] {
        let inst = fixture(model);
        for agent in [AgentKind::BubbleRank, AgentKind::Static, AgentKind::Uniform] {
            group.bench_function(BenchmarkId::new(agent.name(), model), |b| {
                b.iter(|| run_one(&inst, agent, 0, 7, &s).expect("run completes"))
            });
        }
    }
    group.finish();
}

fn inversion_count(c: &mut Criterion) {
    let mut rng = SimRng::seed_from_u64(3);
    let list = RankedList::random(10, &mut rng);
    c.bench_function("inversions/k10", |b| b.iter(|| black_box(&list).inversions()));
}

pub fn benchmarks(c: &mut Criterion) {
    click_sampling(c);
    exact_reward(c);
    simulation_steps(c);
    inversion_count(c);
}
