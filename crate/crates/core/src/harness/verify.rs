//! Oracle suites behind the `verify` command. Each suite yields a
//! [`CheckReport`] with its parameters and counts.

use rand::{Rng, SeedableRng};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::{run_grid, seed_split, ExperimentConfig, GridResult, RunSettings, VerifyConfig};
use crate::agent::AgentKind;
use crate::click_model::{ClickModel, Instance, ModelKind};
use crate::error::{Error, Result};
use crate::list::RankedList;
use crate::oracle::{
    brute_force_optimal, check_click_difference_bound, check_confidence_event, estimate_pairwise_drift,
    gap_regret_check, mc_expected_reward, regret_upper_bound, CheckOutcome, EventEReport,
};
use crate::SimRng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub details: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub failed_runs: usize,
    pub checks: Vec<CheckReport>,
}

fn suite_rng(seed: u64, suite: &str, index: usize) -> SimRng {
    SimRng::seed_from_u64(seed_split(seed, suite, "verify", index as u32))
}

/// A random model with strictly decreasing attraction; PBM examination
/// probabilities are non-increasing.
pub fn random_canonical_model<R: Rng + ?Sized>(kind: ModelKind, k: usize, rng: &mut R) -> Result<ClickModel> {
    let mut alpha: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..0.95)).collect();
    alpha.sort_by(|a, b| b.total_cmp(a));
    alpha.dedup();
    if alpha.len() < k {
        return random_canonical_model(kind, k, rng);
    }
    match kind {
        ModelKind::Cm => ClickModel::cascade(alpha),
        ModelKind::Pbm => {
            let mut chi: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..=1.0)).collect();
            chi.sort_by(|a, b| b.total_cmp(a));
            ClickModel::position_based(alpha, chi)
        }
        ModelKind::Dcm => {
            let v: Vec<f64> = (0..k).map(|_| rng.random_range(0.0..=1.0)).collect();
            ClickModel::dependent_click(alpha, v)
        }
    }
}

const MODELS: [ModelKind; 3] = [ModelKind::Cm, ModelKind::Pbm, ModelKind::Dcm];

/// Monte-Carlo reward against the exact reward on random small instances.
pub fn verify_mc_agreement(cfg: &VerifyConfig, seed: u64) -> Result<CheckReport> {
    let tasks: Vec<(ModelKind, usize)> =
        MODELS.iter().flat_map(|&m| (0..cfg.mc_instances_per_model).map(move |i| (m, i))).collect();
    let outcomes = tasks
        .par_iter()
        .map(|&(kind, idx)| {
            let mut rng = suite_rng(seed, &format!("mc-{kind:?}"), idx);
            let k = rng.random_range(1..=cfg.mc_max_k);
            let model = random_canonical_model(kind, k, &mut rng)?;
            let list = RankedList::random(k, &mut rng);
            let cutoff = rng.random_range(1..=k);
            let exact = model.expected_reward(&list, cutoff);
            let est = mc_expected_reward(&model, &list, cutoff, cfg.mc_samples, &mut rng)?;
            let z = if est.stderr > 0.0 { (est.mean - exact).abs() / est.stderr } else { 0.0 };
            Ok((est.agrees_with(exact, cfg.mc_z), z))
        })
        .collect::<Result<Vec<(bool, f64)>>>()?;
    let disagreements = outcomes.iter().filter(|(ok, _)| !ok).count();
    let max_z = outcomes.iter().map(|&(_, z)| z).fold(0.0, f64::max);
    Ok(CheckReport {
        name: "mc_expected_reward".into(),
        passed: disagreements == 0,
        details: json!({
            "instances": outcomes.len(),
            "samples": cfg.mc_samples,
            "max_k": cfg.mc_max_k,
            "tolerance_se": cfg.mc_z,
            "disagreements": disagreements,
            "max_abs_z": max_z,
        }),
    })
}

/// Exhaustive search returns the descending-attraction list on canonical CM
/// and monotone PBM instances.
pub fn verify_brute_force_optimality(cfg: &VerifyConfig, seed: u64) -> Result<CheckReport> {
    let mut mismatches = Vec::new();
    let mut checked = 0;
    for kind in [ModelKind::Cm, ModelKind::Pbm] {
        for idx in 0..cfg.optimality_instances {
            let mut rng = suite_rng(seed, &format!("optimal-{kind:?}"), idx);
            let k = rng.random_range(1..=cfg.optimality_max_k);
            let model = random_canonical_model(kind, k, &mut rng)?;
            let cutoff = rng.random_range(1..=k);
            let (list, _) = brute_force_optimal(&model, cutoff)?;
            checked += 1;
            if !list.is_identity() {
                mismatches.push(json!({"model": kind, "alpha": model.alpha(), "cutoff": cutoff, "list": list.labels()}));
            }
        }
    }
    // DCM with arbitrary abandonment need not prefer the identity; reported only
    let mut dcm_reordered = 0;
    for idx in 0..20 {
        let mut rng = suite_rng(seed, "optimal-dcm", idx);
        let model = random_canonical_model(ModelKind::Dcm, 3, &mut rng)?;
        dcm_reordered += usize::from(!brute_force_optimal(&model, 3)?.0.is_identity());
    }
    Ok(CheckReport {
        name: "brute_force_optimal".into(),
        passed: mismatches.is_empty(),
        details: json!({
            "instances": checked,
            "max_k": cfg.optimality_max_k,
            "mismatches": mismatches,
            "dcm_k3_not_identity": dcm_reordered,
        }),
    })
}

/// Instant regret never exceeds `K * chi_max` times the attraction gap.
pub fn verify_gap_regret(cfg: &VerifyConfig, seed: u64) -> Result<CheckReport> {
    let mut violations = 0;
    let mut checked = 0;
    for kind in [ModelKind::Cm, ModelKind::Pbm] {
        let mut rng = suite_rng(seed, &format!("gap-{kind:?}"), 0);
        for _ in 0..cfg.gap_lists {
            let k = rng.random_range(2..=6);
            let model = random_canonical_model(kind, k, &mut rng)?;
            let list = RankedList::random(k, &mut rng);
            let (regret, bound) = gap_regret_check(&model, &list)?;
            checked += 1;
            violations += usize::from(regret > bound + 1e-12);
        }
    }
    Ok(CheckReport {
        name: "attraction_gap_regret".into(),
        passed: violations == 0,
        details: json!({"lists": checked, "violations": violations}),
    })
}

/// Conditional drift of randomized pairs against its lower bound, for pairs
/// drawn from the given instances with random base lists.
pub fn verify_pairwise_drift(instances: &[Instance], cfg: &VerifyConfig, seed: u64) -> Result<CheckReport> {
    if instances.is_empty() {
        return Err(Error::InvalidConfig("drift check needs at least one instance".into()));
    }
    let results = (0..cfg.drift_pairs)
        .into_par_iter()
        .map(|idx| {
            let mut rng = suite_rng(seed, "drift", idx);
            let inst = &instances[idx % instances.len()];
            let base = RankedList::random(inst.k(), &mut rng);
            let pos = rng.random_range(0..inst.k() - 1);
            let (a, b) = (base.item_at(pos), base.item_at(pos + 1));
            let (better, worse) = if a.index() < b.index() { (a, b) } else { (b, a) };
            let out = estimate_pairwise_drift(&inst.model, &base, better, worse, cfg.drift_samples, &mut rng);
            let entry = match &out {
                Ok(d) => json!({
                    "instance": inst.id, "pair": d.pair, "estimate": d.estimate,
                    "half_width": d.half_width, "lower_bound": d.lower_bound, "passed": d.clears_lower_bound(),
                }),
                Err(e) => json!({"instance": inst.id, "error": e.to_string(), "passed": false}),
            };
            (out.map(|d| d.clears_lower_bound()).unwrap_or(false), entry)
        })
        .collect::<Vec<_>>();
    let failures = results.iter().filter(|(ok, _)| !ok).count();
    Ok(CheckReport {
        name: "pairwise_drift".into(),
        passed: failures == 0,
        details: json!({
            "pairs": results.len(),
            "samples": cfg.drift_samples,
            "failures": failures,
            "estimates": results.into_iter().map(|(_, e)| e).collect::<Vec<_>>(),
        }),
    })
}

/// Checks on the fixed-horizon BubbleRank runs of a grid recorded with
/// statistics: safety, the confidence event, the click-difference ceiling,
/// promotion direction and the regret ceiling.
pub fn verify_grid_checks(grid: &GridResult, instances: &[Instance], horizon: u64) -> Result<Vec<CheckReport>> {
    let runs: Vec<_> = grid.runs_of(AgentKind::BubbleRank).collect();
    let find = |id: &str| {
        instances
            .iter()
            .find(|i| i.id == id)
            .ok_or_else(|| Error::InvalidConfig(format!("no instance {id:?}")))
    };

    let unsafe_runs = runs.iter().filter(|r| r.checkpoints.iter().any(|m| m.cum_violations > 0)).count();
    let safety = CheckReport {
        name: "safety_constraint".into(),
        passed: unsafe_runs == 0 && !runs.is_empty(),
        details: json!({"runs": runs.len(), "runs_with_violations": unsafe_runs}),
    };

    let mut event: Option<EventEReport> = None;
    let mut bound_fails = 0;
    let mut bound_indeterminate = 0;
    let mut unrecorded = 0;
    let mut backward = 0;
    let mut ceiling_fails = Vec::new();
    let mut tightest = f64::INFINITY;
    let mut no_ceiling = 0;
    for r in &runs {
        let inst = find(&r.instance)?;
        let delta = r.delta.ok_or_else(|| Error::ContractViolation("learner without delta".into()))?;
        backward += r.backward_promotions.unwrap_or(0);
        if r.stats_snapshots.is_empty() {
            unrecorded += 1;
        } else {
            let report = check_confidence_event(r.stats_snapshots.iter().map(|(t, s)| (*t, s)), inst.alpha(), delta)?;
            match &mut event {
                Some(e) => e.merge(&report),
                None => event = Some(report),
            }
            let (_, last) = r.stats_snapshots.last().expect("non-empty");
            for c in check_click_difference_bound(last, inst.alpha(), delta)? {
                match c.outcome {
                    CheckOutcome::Fail => bound_fails += 1,
                    CheckOutcome::Indeterminate => bound_indeterminate += 1,
                    CheckOutcome::Pass => {}
                }
            }
        }
        // tied attractions leave the ceiling undefined
        let ceiling = match regret_upper_bound(inst, inst.initial_list.inversions(), delta, horizon) {
            Ok(c) => c,
            Err(Error::Domain(_)) => {
                no_ceiling += 1;
                continue;
            }
            Err(e) => return Err(e),
        };
        let observed = r.last().cum_regret;
        tightest = tightest.min(ceiling / observed.max(f64::MIN_POSITIVE));
        if observed >= ceiling {
            ceiling_fails.push(json!({"instance": r.instance, "run": r.run, "regret": observed, "bound": ceiling}));
        }
    }
    let recorded = unrecorded == 0 && !runs.is_empty();
    let event_report = event.unwrap_or_else(|| EventEReport::new(0.0));
    Ok(vec![
        safety,
        CheckReport {
            name: "confidence_event".into(),
            passed: recorded && event_report.passed(),
            details: json!({"report": event_report, "runs_without_statistics": unrecorded}),
        },
        CheckReport {
            name: "click_difference_bound".into(),
            passed: recorded && bound_fails == 0,
            details: json!({"failures": bound_fails, "indeterminate": bound_indeterminate}),
        },
        CheckReport {
            name: "promotion_direction".into(),
            passed: backward == 0 && !runs.is_empty(),
            details: json!({"backward_promotions": backward}),
        },
        CheckReport {
            name: "regret_ceiling".into(),
            passed: ceiling_fails.is_empty() && no_ceiling < runs.len(),
            details: json!({
                "violations": ceiling_fails,
                "runs_without_ceiling": no_ceiling,
                "smallest_bound_to_regret_ratio": tightest,
            }),
        },
    ])
}

/// Runs every suite for `config`: the model oracles, then a BubbleRank grid on
/// the configured instances with statistics recorded.
pub fn run_verify(config: &ExperimentConfig) -> Result<VerifyReport> {
    let cfg = &config.verify;
    let mut checks = vec![
        verify_mc_agreement(cfg, config.seed)?,
        verify_brute_force_optimality(cfg, config.seed)?,
        verify_gap_regret(cfg, config.seed)?,
    ];
    let mut failed_runs = 0;
    if !config.instances.is_empty() {
        let instances = config.load_instances()?;
        let settings = RunSettings { record_stats: true, ..RunSettings::from_config(config) };
        let grid = run_grid(&instances, &[AgentKind::BubbleRank], config.runs, config.seed, &settings)?;
        failed_runs = grid.failures.len();
        checks.extend(verify_grid_checks(&grid, &instances, config.horizon)?);
        checks.push(verify_pairwise_drift(&instances, cfg, config.seed)?);
    }
    let passed = failed_runs == 0 && checks.iter().all(|c| c.passed);
    Ok(VerifyReport { passed, failed_runs, checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyConfig {
        VerifyConfig {
            mc_instances_per_model: 5,
            mc_samples: 20_000,
            optimality_instances: 10,
            drift_pairs: 4,
            drift_samples: 50_000,
            gap_lists: 100,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn random_models_are_canonical() {
        let mut rng = SimRng::seed_from_u64(1);
        for kind in MODELS {
            for k in 1..8 {
                let m = random_canonical_model(kind, k, &mut rng).unwrap();
                assert!(m.alpha().windows(2).all(|w| w[0] > w[1]));
                assert_eq!(m.k(), k);
            }
        }
    }

    #[test]
    fn small_suites_pass() {
        let cfg = small();
        assert!(verify_mc_agreement(&cfg, 1).unwrap().passed);
        assert!(verify_brute_force_optimality(&cfg, 1).unwrap().passed);
        assert!(verify_gap_regret(&cfg, 1).unwrap().passed);
    }

    #[test]
    fn grid_checks_need_recorded_statistics() {
        let model = ClickModel::position_based(vec![0.9, 0.7, 0.5, 0.3], vec![1.0, 0.8, 0.6, 0.5]).unwrap();
        let inst = Instance::new("v", model, RankedList::from_labels(&[2, 1, 3, 4]).unwrap(), 2).unwrap();
        let mut config = ExperimentConfig::new(3000, 1, 2);
        config.record_stats = false;
        let settings = RunSettings::from_config(&config);
        let grid = run_grid(std::slice::from_ref(&inst), &[AgentKind::BubbleRank], 1, 2, &settings).unwrap();
        let checks = verify_grid_checks(&grid, std::slice::from_ref(&inst), 3000).unwrap();
        let event = checks.iter().find(|c| c.name == "confidence_event").unwrap();
        assert!(!event.passed);

        let settings = RunSettings { record_stats: true, ..settings };
        let grid = run_grid(std::slice::from_ref(&inst), &[AgentKind::BubbleRank], 1, 2, &settings).unwrap();
        let checks = verify_grid_checks(&grid, std::slice::from_ref(&inst), 3000).unwrap();
        assert!(checks.iter().all(|c| c.passed), "{checks:#?}");
        let drift = verify_pairwise_drift(std::slice::from_ref(&inst), &small(), 3).unwrap();
        assert!(drift.passed, "{drift:#?}");
    }
}
