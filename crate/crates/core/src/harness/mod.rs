//! Experiment driver: runs (instance, agent, run) grids, records metrics at
//! checkpoints and aggregates them across runs.
//!
//! Every run owns its agent and a random stream seeded from
//! [`seed_split`], so results do not depend on scheduling or grid order.

mod config;
mod output;
mod sweep;
mod verify;

use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::agent::{build_agent, Agent, AgentKind, AgentView, LearnerSettings, OracleAgent};
use crate::bubblerank::PairStats;
use crate::click_model::Instance;
use crate::error::{Error, Result};
use crate::list::RankedList;
use crate::metrics::{Evaluator, StepMetrics};
use crate::oracle::RunningMoments;
use crate::SimRng;

pub use config::{checkpoint_schedule, ExperimentConfig, SweepConfig, VerifyConfig};
pub use output::{
    fmt_g17, write_agg_csv, write_chi_csv, write_json, write_runs_csv, write_v0_csv, AGG_HEADER, CHI_HEADER,
    RUNS_HEADER, V0_HEADER,
};
pub use sweep::{fit_line, sanity_sweep_chi, sanity_sweep_v0, ChiRow, ChiSweepReport, LinearFit, V0Row, V0SweepReport};
pub use verify::{
    random_canonical_model, run_verify, verify_brute_force_optimality, verify_gap_regret, verify_grid_checks,
    verify_mc_agreement, verify_pairwise_drift, CheckReport, VerifyReport,
};

/// Derives the seed of one run from the grid coordinates.
///
/// SHA-256 over the base seed, the length-prefixed instance id and agent
/// name, and the run index; the first eight bytes of the digest as a
/// little-endian integer.
pub fn seed_split(base_seed: u64, instance_id: &str, agent: &str, run: u32) -> u64 {
    let mut h = Sha256::new();
    h.update(base_seed.to_le_bytes());
    h.update((instance_id.len() as u64).to_le_bytes());
    h.update(instance_id.as_bytes());
    h.update((agent.len() as u64).to_le_bytes());
    h.update(agent.as_bytes());
    h.update(run.to_le_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}

/// Per-run settings shared by every run of a grid.
#[derive(Clone, Debug)]
pub struct RunSettings {
    pub horizon: u64,
    pub checkpoints: Vec<u64>,
    /// Overrides the instance's own cutoff.
    pub eval_cutoff: Option<usize>,
    pub learner: LearnerSettings,
    pub record_stats: bool,
}

impl RunSettings {
    pub fn from_config(config: &ExperimentConfig) -> Self {
        RunSettings {
            horizon: config.horizon,
            checkpoints: config.checkpoints(),
            eval_cutoff: config.eval_cutoff,
            learner: config.learner_settings(),
            record_stats: config.record_stats,
        }
    }
}

/// One run's trajectory at its checkpoints.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunResult {
    pub instance: String,
    pub agent: AgentKind,
    pub run: u32,
    pub seed: u64,
    pub checkpoints: Vec<StepMetrics>,
    /// The learner's base list, or the last displayed list for other agents.
    pub final_list: RankedList,
    /// Clicks drawn over the whole run.
    pub clicks: u64,
    pub promotions: Option<u64>,
    pub backward_promotions: Option<u64>,
    pub delta: Option<f64>,
    #[serde(skip)]
    pub stats_snapshots: Vec<(u64, PairStats)>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunResult {
    pub fn last(&self) -> &StepMetrics {
        self.checkpoints.last().expect("a run has at least one checkpoint")
    }

    /// The record at `step`, if it is a checkpoint.
    pub fn at(&self, step: u64) -> Option<&StepMetrics> {
        self.checkpoints.binary_search_by_key(&step, |m| m.step).ok().map(|i| &self.checkpoints[i])
    }
}

fn make_agent(kind: AgentKind, instance: &Instance, cutoff: usize, settings: &RunSettings) -> Result<Box<dyn Agent>> {
    if kind == AgentKind::Oracle {
        return Ok(Box::new(OracleAgent::new(&instance.model, cutoff)?));
    }
    let mut view = AgentView::new(instance.initial_list.clone());
    if kind != AgentKind::BubbleRankDoubling {
        view = view.with_horizon(settings.horizon);
    }
    if let crate::bubblerank::DeltaPolicy::Fixed(d) = settings.learner.delta {
        view = view.with_delta(d);
    }
    build_agent(kind, &view, &settings.learner)
}

/// Runs one agent on one instance for `settings.horizon` steps.
///
/// Each step the agent acts, the user model samples clicks on the displayed
/// list, the agent receives them and the metrics accumulate.
pub fn run_one(
    instance: &Instance,
    kind: AgentKind,
    run: u32,
    seed: u64,
    settings: &RunSettings,
) -> Result<RunResult> {
    let started = Instant::now();
    let k = instance.k();
    let cutoff = settings.eval_cutoff.unwrap_or(instance.eval_cutoff);
    let mut evaluator = Evaluator::new(instance, cutoff)?;
    let mut agent = make_agent(kind, instance, cutoff, settings)?;
    let mut rng = SimRng::seed_from_u64(seed);
    let mut displayed = instance.initial_list.clone();
    let mut clicks = vec![false; k];
    let mut total_clicks = 0u64;
    let mut records = Vec::with_capacity(settings.checkpoints.len());
    let mut snapshots = Vec::new();
    let mut next = settings.checkpoints.iter().copied().filter(|&c| c <= settings.horizon).peekable();

    for t in 1..=settings.horizon {
        agent.act(t, &mut rng, &mut displayed)?;
        if displayed.len() != k {
            return Err(Error::ContractViolation(format!(
                "{kind} displayed {} items at step {t}, K = {k}",
                displayed.len()
            )));
        }
        instance.model.sample_clicks_into(&displayed, &mut rng, &mut clicks);
        total_clicks += clicks.iter().filter(|&&c| c).count() as u64;
        agent.feedback(&displayed, &clicks)?;
        if next.peek() == Some(&t) {
            next.next();
            records.push(evaluator.observe_checkpoint(&displayed));
            if settings.record_stats {
                if let Some(stats) = agent.pair_stats() {
                    snapshots.push((t, stats.clone()));
                }
            }
        } else {
            evaluator.observe(&displayed);
        }
    }

    Ok(RunResult {
        instance: instance.id.clone(),
        agent: kind,
        run,
        seed,
        checkpoints: records,
        final_list: agent.base_list().cloned().unwrap_or(displayed),
        clicks: total_clicks,
        promotions: agent.promotions(),
        backward_promotions: agent.backward_promotions(),
        delta: agent.delta(),
        stats_snapshots: snapshots,
        wall_time: started.elapsed(),
    })
}

/// Mean and standard error across runs at one checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub instance: String,
    pub agent: AgentKind,
    pub step: u64,
    pub runs: u32,
    pub mean_cum_regret: f64,
    pub se_cum_regret: f64,
    pub mean_ndcg: f64,
    pub se_ndcg: f64,
    pub mean_cum_violations: f64,
    pub se_cum_violations: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunFailure {
    pub instance: String,
    pub agent: AgentKind,
    pub run: u32,
    pub seed: u64,
    pub error: String,
}

/// Everything a grid produced, in grid order (instance, then agent, then run).
#[derive(Clone, Debug)]
pub struct GridResult {
    pub runs: Vec<RunResult>,
    pub aggregates: Vec<AggregateRow>,
    pub failures: Vec<RunFailure>,
}

impl GridResult {
    pub fn runs_of<'a>(&'a self, agent: AgentKind) -> impl Iterator<Item = &'a RunResult> + 'a {
        self.runs.iter().filter(move |r| r.agent == agent)
    }

    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn total_steps(&self) -> u64 {
        self.runs.iter().map(|r| r.last().step).sum()
    }

    /// Writes `runs.csv`, `agg.csv` and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        write_runs_csv(BufWriter::new(fs::File::create(dir.join("runs.csv"))?), &self.runs)?;
        write_agg_csv(BufWriter::new(fs::File::create(dir.join("agg.csv"))?), &self.aggregates)?;
        write_json(&dir.join("summary.json"), &self.summary())?;
        Ok(())
    }

    pub fn summary(&self) -> GridSummary {
        GridSummary {
            completed: self.runs.len(),
            failures: self.failures.clone(),
            runs: self
                .runs
                .iter()
                .map(|r| RunSummary {
                    instance: r.instance.clone(),
                    agent: r.agent,
                    run: r.run,
                    seed: r.seed,
                    final_list: r.final_list.labels(),
                    final_cum_regret: r.last().cum_regret,
                    final_cum_violations: r.last().cum_violations,
                    clicks: r.clicks,
                    promotions: r.promotions,
                    backward_promotions: r.backward_promotions,
                })
                .collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunSummary {
    pub instance: String,
    pub agent: AgentKind,
    pub run: u32,
    pub seed: u64,
    pub final_list: Vec<usize>,
    pub final_cum_regret: f64,
    pub final_cum_violations: u64,
    pub clicks: u64,
    pub promotions: Option<u64>,
    pub backward_promotions: Option<u64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GridSummary {
    pub completed: usize,
    pub failures: Vec<RunFailure>,
    pub runs: Vec<RunSummary>,
}

/// Runs every (instance, agent, run) combination, in parallel.
///
/// Failed runs are listed in `failures` and left out of the aggregates.
pub fn run_grid(
    instances: &[Instance],
    agents: &[AgentKind],
    runs: u32,
    base_seed: u64,
    settings: &RunSettings,
) -> Result<GridResult> {
    if instances.is_empty() || agents.is_empty() {
        return Err(Error::InvalidConfig("a grid needs at least one instance and one agent".into()));
    }
    let tasks: Vec<(&Instance, AgentKind, u32)> = instances
        .iter()
        .flat_map(|inst| agents.iter().flat_map(move |&a| (0..runs).map(move |r| (inst, a, r))))
        .collect();
    let outcomes: Vec<(u64, Result<RunResult>)> = tasks
        .par_iter()
        .map(|&(inst, agent, run)| {
            let seed = seed_split(base_seed, &inst.id, agent.name(), run);
            (seed, run_one(inst, agent, run, seed, settings))
        })
        .collect();

    let mut results = Vec::with_capacity(tasks.len());
    let mut failures = Vec::new();
    for (&(inst, agent, run), (seed, outcome)) in tasks.iter().zip(outcomes) {
        match outcome {
            Ok(r) => results.push(r),
            Err(e) => {
                log::error!("run {run} of {agent} on {} failed: {e}", inst.id);
                failures.push(RunFailure { instance: inst.id.clone(), agent, run, seed, error: e.to_string() });
            }
        }
    }
    let aggregates = aggregate(&results);
    Ok(GridResult { runs: results, aggregates, failures })
}

/// Runs the grid described by `config`.
pub fn run_config(config: &ExperimentConfig) -> Result<GridResult> {
    let instances = config.load_instances()?;
    run_grid(&instances, &config.agents, config.runs, config.seed, &RunSettings::from_config(config))
}

/// Mean and standard error per (instance, agent, checkpoint), keeping the
/// order in which series first appear.
pub fn aggregate(runs: &[RunResult]) -> Vec<AggregateRow> {
    let mut series: Vec<((&str, AgentKind), Vec<&RunResult>)> = Vec::new();
    for r in runs {
        let key = (r.instance.as_str(), r.agent);
        match series.iter_mut().find(|(k, _)| *k == key) {
            Some((_, members)) => members.push(r),
            None => series.push((key, vec![r])),
        }
    }
    let mut rows = Vec::new();
    for ((instance, agent), members) in series {
        let points = members.iter().map(|r| r.checkpoints.len()).min().unwrap_or(0);
        for idx in 0..points {
            let mut regret = RunningMoments::default();
            let mut ndcg = RunningMoments::default();
            let mut violations = RunningMoments::default();
            for r in &members {
                let m = &r.checkpoints[idx];
                regret.push(m.cum_regret);
                ndcg.push(m.ndcg);
                violations.push(m.cum_violations as f64);
            }
            rows.push(AggregateRow {
                instance: instance.to_string(),
                agent,
                step: members[0].checkpoints[idx].step,
                runs: members.len() as u32,
                mean_cum_regret: regret.mean(),
                se_cum_regret: regret.stderr(),
                mean_ndcg: ndcg.mean(),
                se_ndcg: ndcg.stderr(),
                mean_cum_violations: violations.mean(),
                se_cum_violations: violations.stderr(),
            });
        }
    }
    rows
}
