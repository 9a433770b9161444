//! Regret, safety violations, NDCG and the attraction gap.

use serde::{Deserialize, Serialize};

use crate::click_model::{ClickModel, Instance};
use crate::error::{Error, Result};
use crate::list::RankedList;

/// Metrics recorded at one checkpoint of a run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepMetrics {
    pub step: u64,
    pub instant_regret: f64,
    pub cum_regret: f64,
    pub ndcg: f64,
    pub inversions: usize,
    pub violation: bool,
    pub cum_violations: u64,
}

/// Expected-reward shortfall of `displayed` against the optimal reward.
///
/// Differences below rounding noise are reported as 0, so the result is never
/// negative when `optimal` is exact.
#[inline]
pub fn instant_regret(model: &ClickModel, optimal: f64, displayed: &RankedList, cutoff: usize) -> f64 {
    (optimal - model.expected_reward(displayed, cutoff)).max(0.0)
}

/// Whether `displayed` has more than `v0_size + K/2` incorrectly ordered pairs.
///
/// `K/2` is not rounded: the comparison is `2|V| > 2|V0| + K`.
pub fn violation_indicator(displayed: &RankedList, v0_size: usize, k: usize) -> bool {
    exceeds_budget(displayed.inversions(), v0_size, k)
}

#[inline]
fn exceeds_budget(inversions: usize, v0_size: usize, k: usize) -> bool {
    2 * inversions > 2 * v0_size + k
}

/// `1 / log2(k + 2)` for 0-based positions `0..cutoff`.
fn discounts(cutoff: usize) -> Vec<f64> {
    (0..cutoff).map(|k| 1.0 / ((k + 2) as f64).log2()).collect()
}

fn dcg(list: &RankedList, alpha: &[f64], discounts: &[f64]) -> f64 {
    list.items().iter().zip(discounts).map(|(item, d)| alpha[item.index()] * d).sum()
}

/// DCG of `list` over the first `cutoff` positions, normalized by the DCG of
/// the descending-attraction list. Attraction probabilities are the gains.
///
/// Returns 1.0 when the normalizer is 0.
pub fn ndcg_at(list: &RankedList, alpha: &[f64], cutoff: usize) -> Result<f64> {
    if alpha.len() != list.len() {
        return Err(Error::Domain(format!("{} attraction values for {} items", alpha.len(), list.len())));
    }
    if cutoff == 0 || cutoff > list.len() {
        return Err(Error::Domain(format!("cutoff {cutoff} is outside 1..={}", list.len())));
    }
    let d = discounts(cutoff);
    let ideal = dcg(&RankedList::identity(list.len()), alpha, &d);
    if ideal == 0.0 {
        return Ok(1.0);
    }
    Ok(dcg(list, alpha, &d) / ideal)
}

/// Sum over adjacent positions of the attraction increase from position `k`
/// to `k + 1`, counting increases only.
pub fn attraction_gap(list: &RankedList, alpha: &[f64]) -> f64 {
    list.items()
        .windows(2)
        .map(|w| (alpha[w[1].index()] - alpha[w[0].index()]).max(0.0))
        .sum()
}

/// Per-run metric accumulator with the instance constants precomputed.
#[derive(Clone, Debug)]
pub struct Evaluator {
    model: ClickModel,
    cutoff: usize,
    optimal: f64,
    discounts: Vec<f64>,
    ideal_dcg: f64,
    v0_size: usize,
    k: usize,
    step: u64,
    cum_regret: f64,
    cum_violations: u64,
}

impl Evaluator {
    pub fn new(instance: &Instance, cutoff: usize) -> Result<Self> {
        let k = instance.k();
        if cutoff == 0 || cutoff > k {
            return Err(Error::InvalidConfig(format!("cutoff {cutoff} is outside 1..={k}")));
        }
        let model = instance.model.clone();
        let (_, optimal) = model.optimal_reward(cutoff);
        let discounts = discounts(cutoff);
        let ideal_dcg = dcg(&RankedList::identity(k), model.alpha(), &discounts);
        Ok(Evaluator {
            model,
            cutoff,
            optimal,
            discounts,
            ideal_dcg,
            v0_size: instance.initial_list.inversions(),
            k,
            step: 0,
            cum_regret: 0.0,
            cum_violations: 0,
        })
    }

    pub fn optimal_reward(&self) -> f64 {
        self.optimal
    }

    pub fn v0_size(&self) -> usize {
        self.v0_size
    }

    pub fn cum_regret(&self) -> f64 {
        self.cum_regret
    }

    pub fn cum_violations(&self) -> u64 {
        self.cum_violations
    }

    /// Accumulates regret and violations for the next step. Cheap enough to
    /// call on every step.
    #[inline]
    pub fn observe(&mut self, displayed: &RankedList) -> (f64, usize, bool) {
        self.step += 1;
        let regret = instant_regret(&self.model, self.optimal, displayed, self.cutoff);
        self.cum_regret += regret;
        let inversions = displayed.inversions();
        let violation = exceeds_budget(inversions, self.v0_size, self.k);
        self.cum_violations += u64::from(violation);
        (regret, inversions, violation)
    }

    /// Observes `displayed` and returns the full record for this step.
    pub fn observe_checkpoint(&mut self, displayed: &RankedList) -> StepMetrics {
        let (instant_regret, inversions, violation) = self.observe(displayed);
        StepMetrics {
            step: self.step,
            instant_regret,
            cum_regret: self.cum_regret,
            ndcg: self.ndcg(displayed),
            inversions,
            violation,
            cum_violations: self.cum_violations,
        }
    }

    pub fn ndcg(&self, list: &RankedList) -> f64 {
        if self.ideal_dcg == 0.0 {
            return 1.0;
        }
        dcg(list, self.model.alpha(), &self.discounts) / self.ideal_dcg
    }
}
