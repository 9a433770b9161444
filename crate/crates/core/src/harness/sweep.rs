//! Sanity sweeps: regret against the smallest examination probability and
//! against the number of incorrectly ordered pairs in the initial list.

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{run_one, seed_split, ExperimentConfig, RunSettings};
use crate::agent::AgentKind;
use crate::click_model::{build_sanity_pbm, Instance};
use crate::error::{Error, Result};
use crate::list::RankedList;
use crate::oracle::RunningMoments;
use crate::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiRow {
    pub i: u32,
    pub chi_min: f64,
    pub final_regret: f64,
    pub se_final_regret: f64,
    /// Final regret over the previous row's; absent on the first row.
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSweepReport {
    pub horizon: u64,
    pub runs: u32,
    pub rows: Vec<ChiRow>,
}

/// Mean and standard error of the final cumulative regret of BubbleRank over
/// `runs` runs on each instance.
fn final_regrets(instances: &[Instance], config: &ExperimentConfig) -> Result<Vec<(f64, f64)>> {
    let settings = RunSettings {
        checkpoints: vec![config.horizon],
        record_stats: false,
        ..RunSettings::from_config(config)
    };
    let tasks: Vec<(usize, u32)> = (0..instances.len()).flat_map(|i| (0..config.runs).map(move |r| (i, r))).collect();
    let finals = tasks
        .par_iter()
        .map(|&(i, run)| {
            let inst = &instances[i];
            let seed = seed_split(config.seed, &inst.id, AgentKind::BubbleRank.name(), run);
            run_one(inst, AgentKind::BubbleRank, run, seed, &settings).map(|r| r.last().cum_regret)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(finals
        .chunks(config.runs as usize)
        .map(|chunk| {
            let mut m = RunningMoments::default();
            chunk.iter().for_each(|&x| m.push(x));
            (m.mean(), m.stderr())
        })
        .collect())
}

/// Runs BubbleRank on the synthetic PBM with the last two examination
/// probabilities set to `0.5^i`, for each configured `i`.
pub fn sanity_sweep_chi(config: &ExperimentConfig) -> Result<ChiSweepReport> {
    if config.sweep.chi_levels.is_empty() {
        return Err(Error::InvalidConfig("no chi levels to sweep".into()));
    }
    let instances = config.sweep.chi_levels.iter().map(|&i| build_sanity_pbm(i)).collect::<Result<Vec<_>>>()?;
    let finals = final_regrets(&instances, config)?;
    let mut rows: Vec<ChiRow> = Vec::with_capacity(finals.len());
    for (&i, (mean, se)) in config.sweep.chi_levels.iter().zip(finals) {
        let ratio = rows.last().map(|prev| mean / prev.final_regret);
        rows.push(ChiRow { i, chi_min: 0.5f64.powi(i as i32), final_regret: mean, se_final_regret: se, ratio });
    }
    Ok(ChiSweepReport { horizon: config.horizon, runs: config.runs, rows })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::Domain("a line fit needs at least two paired points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) };
    Ok(LinearFit { slope, intercept, r_squared })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct V0Row {
    pub list: usize,
    pub v0: usize,
    pub initial_list: Vec<usize>,
    pub final_regret: f64,
    pub se_final_regret: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct V0SweepReport {
    pub instance: String,
    pub horizon: u64,
    pub runs: u32,
    pub rows: Vec<V0Row>,
    pub fit: LinearFit,
}

/// Runs BubbleRank from random initial lists of `instance` (plus the optimal
/// list when configured) and fits final regret against the number of
/// incorrectly ordered pairs.
///
/// The initial lists come from their own seed stream, so they do not change
/// with the number of runs.
pub fn sanity_sweep_v0(instance: &Instance, config: &ExperimentConfig) -> Result<V0SweepReport> {
    let sweep = &config.sweep;
    if sweep.initial_lists + usize::from(sweep.include_optimal) < 2 {
        return Err(Error::InvalidConfig("the sweep needs at least two initial lists".into()));
    }
    let mut list_rng = SimRng::seed_from_u64(seed_split(config.seed, &instance.id, "initial-lists", 0));
    let mut lists = Vec::new();
    if sweep.include_optimal {
        lists.push(RankedList::identity(instance.k()));
    }
    lists.extend((0..sweep.initial_lists).map(|_| RankedList::random(instance.k(), &mut list_rng)));

    let variants: Vec<Instance> = lists
        .iter()
        .enumerate()
        .map(|(m, l)| Instance { id: format!("{}/r0-{m}", instance.id), initial_list: l.clone(), ..instance.clone() })
        .collect();
    let finals = final_regrets(&variants, config)?;
    let rows: Vec<V0Row> = lists
        .iter()
        .zip(finals)
        .enumerate()
        .map(|(m, (l, (mean, se)))| V0Row {
            list: m,
            v0: l.inversions(),
            initial_list: l.labels(),
            final_regret: mean,
            se_final_regret: se,
        })
        .collect();
    let x: Vec<f64> = rows.iter().map(|r| r.v0 as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.final_regret).collect();
    let fit = fit_line(&x, &y)?;
    Ok(V0SweepReport { instance: instance.id.clone(), horizon: config.horizon, runs: config.runs, rows, fit })
}
