//! Acceptance suite: one check per criterion, run in sequence so the
//! throughput measurement has the machine to itself. Prints one PASS/FAIL
//! line per criterion and exits non-zero if any fails.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use bubblerank::harness::{
    run_config, run_one, sanity_sweep_chi, sanity_sweep_v0, seed_split, verify_brute_force_optimality,
    verify_grid_checks, verify_mc_agreement, verify_pairwise_drift, write_agg_csv, write_runs_csv, ExperimentConfig,
    GridResult, RunSettings, VerifyConfig,
};
use bubblerank::{AgentKind, Instance};

const HORIZON: u64 = 1_000_000;

fn data(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(rel)
}

fn load(rel: &str) -> ExperimentConfig {
    ExperimentConfig::load(data(rel)).unwrap_or_else(|e| panic!("loading {rel}: {e}"))
}

struct Grid {
    config: ExperimentConfig,
    instances: Vec<Instance>,
    result: GridResult,
}

fn safety_grid() -> Grid {
    let mut config = load("configs/grid.json");
    config.record_stats = true;
    assert_eq!(config.horizon, HORIZON);
    assert!(config.extra_checkpoints.contains(&100) && config.extra_checkpoints.contains(&100_000));
    let instances = config.load_instances().expect("grid instances");
    let result = run_config(&config).expect("grid runs");
    Grid { config, instances, result }
}

fn mean_regret(grid: &Grid, instance: &str, agent: AgentKind, step: u64) -> f64 {
    grid.result
        .aggregates
        .iter()
        .find(|r| r.instance == instance && r.agent == agent && r.step == step)
        .unwrap_or_else(|| panic!("no aggregate for {instance}/{agent} at {step}"))
        .mean_cum_regret
}

type Outcome = (bool, String);

fn oracle_equivalence() -> Outcome {
    let r = verify_mc_agreement(&VerifyConfig::default(), 11).expect("mc suite");
    (r.passed, format!("{}", r.details))
}

fn optimality() -> Outcome {
    let r = verify_brute_force_optimality(&VerifyConfig::default(), 12).expect("optimality suite");
    (r.passed, format!("instances={} mismatches={}", r.details["instances"], r.details["mismatches"]))
}

fn safety(grid: &Grid) -> Outcome {
    let g = &grid.result;
    let br: Vec<_> = g.runs_of(AgentKind::BubbleRank).collect();
    let unsafe_runs = br.iter().filter(|r| r.checkpoints.iter().any(|m| m.cum_violations > 0)).count();
    let uniform: Vec<_> = g.runs_of(AgentKind::Uniform).collect();
    let early = uniform.iter().filter(|r| r.at(100).expect("checkpoint 100").cum_violations > 0).count();
    let frac = early as f64 / uniform.len().max(1) as f64;
    let ok = g.succeeded() && br.len() == 50 && unsafe_runs == 0 && uniform.len() == 50 && frac >= 0.9;
    (ok, format!("bubblerank runs={} with violations={unsafe_runs}; uniform violating by step 100: {frac:.2}", br.len()))
}

fn convergence(grid: &Grid) -> Outcome {
    let mut ok = true;
    let mut worst = (f64::INFINITY, 0.0f64, (f64::INFINITY, 0.0f64));
    for inst in grid.instances.iter().filter(|i| !i.initial_list.is_identity()) {
        let b6 = mean_regret(grid, &inst.id, AgentKind::BubbleRank, HORIZON);
        let b5 = mean_regret(grid, &inst.id, AgentKind::BubbleRank, 100_000);
        let s6 = mean_regret(grid, &inst.id, AgentKind::Static, HORIZON);
        let s5 = mean_regret(grid, &inst.id, AgentKind::Static, 100_000);
        let (vs, br_ratio, st_ratio) = (s6 / b6, b6 / b5, s6 / s5);
        ok &= vs >= 10.0 && br_ratio < 5.0 && (9.5..=10.5).contains(&st_ratio);
        worst.0 = worst.0.min(vs);
        worst.1 = worst.1.max(br_ratio);
        worst.2 = (worst.2 .0.min(st_ratio), worst.2 .1.max(st_ratio));
    }
    (
        ok,
        format!(
            "min static/bubblerank={:.2}; max bubblerank growth={:.2}; static growth in [{:.3}, {:.3}]",
            worst.0, worst.1, worst.2 .0, worst.2 .1
        ),
    )
}

fn chi_sweep() -> Outcome {
    let config = load("configs/sanity-chi.json");
    assert_eq!((config.horizon, config.runs), (HORIZON, 10));
    let report = sanity_sweep_chi(&config).expect("chi sweep");
    let ratios: Vec<f64> = report.rows.iter().filter_map(|r| r.ratio).collect();
    let inside = ratios.iter().filter(|r| (1.5..=2.5).contains(*r)).count();
    (ratios.len() == 4 && inside >= 3, format!("ratios={ratios:.3?}"))
}

fn v0_linearity() -> Outcome {
    let config = load("configs/sanity-v0.json");
    assert_eq!((config.horizon, config.runs, config.sweep.initial_lists), (HORIZON, 5, 10));
    let instances = config.load_instances().expect("v0 instance");
    let report = sanity_sweep_v0(&instances[0], &config).expect("v0 sweep");
    let f = report.fit;
    (f.r_squared >= 0.7 && f.slope > 0.0, format!("slope={:.2} r2={:.4}", f.slope, f.r_squared))
}

fn learner_checks(grid: &Grid) -> Outcome {
    let mut checks = verify_grid_checks(&grid.result, &grid.instances, grid.config.horizon).expect("grid checks");
    checks.push(verify_pairwise_drift(&grid.instances, &VerifyConfig::default(), 13).expect("drift suite"));
    let wanted = ["confidence_event", "click_difference_bound", "pairwise_drift", "regret_ceiling"];
    let picked: Vec<_> = checks.iter().filter(|c| wanted.contains(&c.name.as_str())).collect();
    let ok = picked.len() == wanted.len() && picked.iter().all(|c| c.passed);
    let summary: Vec<String> =
        picked.iter().map(|c| format!("{}={}", c.name, if c.passed { "ok" } else { "fail" })).collect();
    (ok, summary.join(" "))
}

fn ndcg(grid: &Grid) -> Outcome {
    let g = &grid.result;
    let series = |agent: AgentKind| -> Vec<(u64, f64)> {
        let mut steps: Vec<u64> = g.aggregates.iter().filter(|r| r.agent == agent).map(|r| r.step).collect();
        steps.sort_unstable();
        steps.dedup();
        steps
            .into_iter()
            .map(|t| {
                let rows: Vec<f64> =
                    g.aggregates.iter().filter(|r| r.agent == agent && r.step == t).map(|r| r.mean_ndcg).collect();
                (t, rows.iter().sum::<f64>() / rows.len() as f64)
            })
            .collect()
    };
    let (br, st) = (series(AgentKind::BubbleRank), series(AgentKind::Static));
    let margin = br.iter().zip(&st).map(|((_, b), (_, s))| b - s).fold(f64::INFINITY, f64::min);
    let mut final_min = f64::INFINITY;
    for inst in &grid.instances {
        let at_end = |agent| {
            g.aggregates.iter().find(|r| r.instance == inst.id && r.agent == agent && r.step == HORIZON).unwrap().mean_ndcg
        };
        if at_end(AgentKind::Static) < 1.0 {
            final_min = final_min.min(at_end(AgentKind::BubbleRank));
        }
    }
    let ok = br.len() == st.len() && margin >= -0.02 && final_min >= 0.99;
    (ok, format!("worst mean margin={margin:.4}; min final ndcg where static is suboptimal={final_min:.4}"))
}

fn determinism_and_throughput(grid: &Grid) -> Outcome {
    let csvs = |g: &GridResult| {
        let (mut runs, mut agg) = (Vec::new(), Vec::new());
        write_runs_csv(&mut runs, &g.runs).unwrap();
        write_agg_csv(&mut agg, &g.aggregates).unwrap();
        (runs, agg)
    };
    let again = run_config(&grid.config).expect("rerun");
    let identical = csvs(&grid.result) == csvs(&again);

    let inst = grid.instances.iter().find(|i| i.id == "pbm-1").expect("pbm-1 in grid");
    let settings = RunSettings { record_stats: false, ..RunSettings::from_config(&grid.config) };
    let seed = seed_split(1, &inst.id, "throughput", 0);
    let started = Instant::now();
    run_one(inst, AgentKind::BubbleRank, 0, seed, &settings).expect("throughput run");
    let rate = HORIZON as f64 / started.elapsed().as_secs_f64();
    (identical && rate >= 1e6, format!("byte-identical={identical}; {rate:.3e} steps/s"))
}

fn main() -> ExitCode {
    // test listing runs nothing
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let mut failed = 0;
    let mut report = |n: u32, name: &str, started: Instant, (ok, detail): Outcome| {
        println!(
            "criterion {n} {name}: {} ({detail}) [{:.1}s]",
            if ok { "PASS" } else { "FAIL" },
            started.elapsed().as_secs_f64()
        );
        failed += usize::from(!ok);
    };

    let t = Instant::now();
    report(1, "oracle equivalence", t, oracle_equivalence());
    let t = Instant::now();
    report(2, "optimality", t, optimality());
    let t = Instant::now();
    let grid = safety_grid();
    report(3, "safety", t, safety(&grid));
    let t = Instant::now();
    report(4, "convergence shape", t, convergence(&grid));
    let t = Instant::now();
    report(5, "chi_min sweep", t, chi_sweep());
    let t = Instant::now();
    report(6, "initial inversions linearity", t, v0_linearity());
    let t = Instant::now();
    report(7, "learner checks", t, learner_checks(&grid));
    let t = Instant::now();
    report(8, "ndcg", t, ndcg(&grid));
    let t = Instant::now();
    report(9, "determinism and throughput", t, determinism_and_throughput(&grid));

    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
