//! Independent oracles for the simulator and empirical checks of the
//! learner's analytical guarantees.
//!
//! Every check returns a report value; none of them panics on a failed
//! inequality, so callers decide how failures are surfaced.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bubblerank::{threshold, PairStats};
use crate::click_model::{ClickModel, Instance, ModelKind, MAX_EXACT_K, REWARD_TIE_TOLERANCE};
use crate::error::{Error, Result};
use crate::list::{Item, RankedList};
use crate::metrics::{attraction_gap, instant_regret};

/// A Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: u64,
}

impl McEstimate {
    /// Whether `value` lies within `z` standard errors of the mean.
    pub fn agrees_with(&self, value: f64, z: f64) -> bool {
        (self.mean - value).abs() <= z * self.stderr + 1e-12
    }
}

/// Welford accumulator for means and sample variances.
#[derive(Clone, Copy, Debug, Default)]
pub struct RunningMoments {
    count: u64,
    mean: f64,
    m2: f64,
}

impl RunningMoments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; 0 for fewer than two samples.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    /// Standard error of the mean; 0 for fewer than two samples.
    pub fn stderr(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Monte-Carlo estimate of the expected reward of `list` at `cutoff`.
///
/// Under CM and PBM a sample is the number of clicks in the first `cutoff`
/// positions; under DCM it is 1 if the session ended with a click inside the
/// cutoff.
pub fn mc_expected_reward<R: Rng + ?Sized>(
    model: &ClickModel,
    list: &RankedList,
    cutoff: usize,
    samples: u64,
    rng: &mut R,
) -> Result<McEstimate> {
    if samples == 0 {
        return Err(Error::Domain("at least one sample is required".into()));
    }
    if cutoff == 0 || cutoff > model.k() || list.len() != model.k() {
        return Err(Error::Domain(format!("cutoff {cutoff} or list length {} does not fit K = {}", list.len(), model.k())));
    }
    let mut clicks = vec![false; list.len()];
    let mut moments = RunningMoments::default();
    for _ in 0..samples {
        let end = model.sample_clicks_into(list, rng, &mut clicks);
        let x = match model.kind() {
            ModelKind::Cm | ModelKind::Pbm => clicks[..cutoff].iter().filter(|&&c| c).count() as f64,
            ModelKind::Dcm => f64::from(u8::from(end.is_some_and(|k| k < cutoff))),
        };
        moments.push(x);
    }
    Ok(McEstimate { mean: moments.mean(), stderr: moments.stderr(), samples })
}

/// Empirical click rate at each position, for comparison against
/// `examination_prob * alpha`.
pub fn mc_click_rates<R: Rng + ?Sized>(model: &ClickModel, list: &RankedList, samples: u64, rng: &mut R) -> Vec<f64> {
    let mut totals = vec![0u64; list.len()];
    let mut clicks = vec![false; list.len()];
    for _ in 0..samples {
        model.sample_clicks_into(list, rng, &mut clicks);
        for (t, &c) in totals.iter_mut().zip(&clicks) {
            *t += u64::from(c);
        }
    }
    totals.into_iter().map(|t| t as f64 / samples as f64).collect()
}

/// Outcome of the high-probability confidence event over sampled statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventEReport {
    /// Unordered pairs checked, summed over snapshots.
    pub checked_pairs: u64,
    /// More attractive item fell short of its expected click lead.
    pub violations_lower: u64,
    /// Less attractive item led by more than the confidence radius.
    pub violations_upper: u64,
    pub delta: f64,
    pub steps: u64,
    pub snapshots: u64,
    /// Snapshots are taken at checkpoints, not at every step.
    pub sampled: bool,
}

impl EventEReport {
    pub fn new(delta: f64) -> Self {
        EventEReport {
            checked_pairs: 0,
            violations_lower: 0,
            violations_upper: 0,
            delta,
            steps: 0,
            snapshots: 0,
            sampled: true,
        }
    }

    pub fn passed(&self) -> bool {
        self.violations_lower == 0 && self.violations_upper == 0
    }

    pub fn merge(&mut self, other: &EventEReport) {
        self.checked_pairs += other.checked_pairs;
        self.violations_lower += other.violations_lower;
        self.violations_upper += other.violations_upper;
        self.steps = self.steps.max(other.steps);
        self.snapshots += other.snapshots;
    }
}

/// Whether the more attractive item `i` (smaller index than `j`) leads by at
/// least its expected margin minus the confidence radius.
pub fn lower_confidence_holds(s_ij: i64, n_ij: u64, alpha_i: f64, alpha_j: f64, delta: f64) -> Result<bool> {
    let margin = if alpha_i + alpha_j > 0.0 { (alpha_i - alpha_j) / (alpha_i + alpha_j) } else { 0.0 };
    Ok(margin * n_ij as f64 - threshold(n_ij, delta)? <= s_ij as f64)
}

/// Checks both confidence inequalities for every pair of every snapshot.
///
/// `snapshots` pairs a step number with the statistics after that step.
pub fn check_confidence_event<'a>(
    snapshots: impl IntoIterator<Item = (u64, &'a PairStats)>,
    alpha: &[f64],
    delta: f64,
) -> Result<EventEReport> {
    let mut report = EventEReport::new(delta);
    threshold(0, delta)?;
    for (step, stats) in snapshots {
        if stats.k() != alpha.len() {
            return Err(Error::Domain(format!("statistics over {} items, {} attraction values", stats.k(), alpha.len())));
        }
        report.snapshots += 1;
        report.steps = report.steps.max(step);
        for i in 0..alpha.len() {
            for j in i + 1..alpha.len() {
                let (a, b) = (Item::new(i), Item::new(j));
                let n = stats.n(a, b);
                report.checked_pairs += 1;
                if !lower_confidence_holds(stats.s(a, b), n, alpha[i], alpha[j], delta)? {
                    report.violations_lower += 1;
                }
                if stats.s(b, a) as f64 > threshold(n, delta)? {
                    report.violations_upper += 1;
                }
            }
        }
    }
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckOutcome {
    Pass,
    Fail,
    Indeterminate,
}

/// The click-difference ceiling of one pair after a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairBoundCheck {
    /// 1-based labels, more attractive item first.
    pub pair: (usize, usize),
    pub s: i64,
    pub bound: Option<f64>,
    pub outcome: CheckOutcome,
}

/// `15 (a_i + a_j) / (a_i - a_j) ln(1/delta)`, the largest click difference
/// a pair can accumulate before it stops being randomized.
pub fn click_difference_bound(alpha_i: f64, alpha_j: f64, delta: f64) -> Result<f64> {
    if alpha_i <= alpha_j {
        return Err(Error::Domain(format!("attraction {alpha_i} does not exceed {alpha_j}")));
    }
    let radius = threshold(1, delta)?;
    let log_inv_delta = radius * radius / 4.0;
    Ok(15.0 * (alpha_i + alpha_j) / (alpha_i - alpha_j) * log_inv_delta)
}

/// Checks `s(i, j)` against its ceiling for every pair `i < j`. Pairs with
/// equal attraction are indeterminate.
pub fn check_click_difference_bound(stats: &PairStats, alpha: &[f64], delta: f64) -> Result<Vec<PairBoundCheck>> {
    if stats.k() != alpha.len() {
        return Err(Error::Domain(format!("statistics over {} items, {} attraction values", stats.k(), alpha.len())));
    }
    threshold(0, delta)?;
    let mut out = Vec::with_capacity(alpha.len() * alpha.len().saturating_sub(1) / 2);
    for i in 0..alpha.len() {
        for j in i + 1..alpha.len() {
            let s = stats.s(Item::new(i), Item::new(j));
            let (bound, outcome) = if alpha[i] > alpha[j] {
                let b = click_difference_bound(alpha[i], alpha[j], delta)?;
                (Some(b), if s as f64 <= b { CheckOutcome::Pass } else { CheckOutcome::Fail })
            } else {
                (None, CheckOutcome::Indeterminate)
            };
            out.push(PairBoundCheck { pair: (i + 1, j + 1), s, bound, outcome });
        }
    }
    Ok(out)
}

/// Estimated conditional drift of the click difference of one pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftEstimate {
    /// 1-based labels as passed in, `z = c(first) - c(second)`.
    pub pair: (usize, usize),
    pub estimate: f64,
    /// Half-width of the interval, three standard errors.
    pub half_width: f64,
    pub nonzero: u64,
    pub samples: u64,
    /// `(a_i - a_j) / (a_i + a_j)`.
    pub lower_bound: f64,
}

impl DriftEstimate {
    pub fn clears_lower_bound(&self) -> bool {
        self.estimate + self.half_width >= self.lower_bound
    }
}

/// Estimates `E[z | z != 0]` for the adjacent items `i` and `j` of
/// `base_list`, displaying the pair exchanged with probability 1/2 exactly as
/// the learner does and sampling clicks from `model`.
pub fn estimate_pairwise_drift<R: Rng + ?Sized>(
    model: &ClickModel,
    base_list: &RankedList,
    i: Item,
    j: Item,
    samples: u64,
    rng: &mut R,
) -> Result<DriftEstimate> {
    if base_list.len() != model.k() {
        return Err(Error::Domain("base list does not match the model".into()));
    }
    let (pi, pj) = (base_list.position_of(i)?, base_list.position_of(j)?);
    if pi.abs_diff(pj) != 1 {
        return Err(Error::Domain(format!("items {i} and {j} are not adjacent")));
    }
    let upper = pi.min(pj);
    let mut exchanged = base_list.clone();
    exchanged.swap_adjacent_in_place(upper)?;
    let mut clicks = vec![false; base_list.len()];
    let mut moments = RunningMoments::default();
    for _ in 0..samples {
        let shown = if rng.random::<bool>() { &exchanged } else { base_list };
        model.sample_clicks_into(shown, rng, &mut clicks);
        let z = i8::from(clicks[shown.position_unchecked(i)]) - i8::from(clicks[shown.position_unchecked(j)]);
        if z != 0 {
            moments.push(f64::from(z));
        }
    }
    if moments.count() == 0 {
        return Err(Error::Indeterminate(format!("no single-click outcomes for ({i}, {j}) in {samples} samples")));
    }
    let (ai, aj) = (model.alpha()[i.index()], model.alpha()[j.index()]);
    let lower_bound = if ai + aj > 0.0 { (ai - aj) / (ai + aj) } else { 0.0 };
    Ok(DriftEstimate {
        pair: (i.label(), j.label()),
        estimate: moments.mean(),
        half_width: 3.0 * moments.stderr(),
        nonzero: moments.count(),
        samples,
        lower_bound,
    })
}

/// Inputs of the regret ceiling.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretBoundParts {
    pub k: usize,
    pub chi_max: f64,
    pub chi_min: f64,
    pub min_gap: f64,
    pub v0_size: usize,
    pub delta: f64,
    pub horizon: u64,
}

impl RegretBoundParts {
    pub fn for_instance(instance: &Instance, v0_size: usize, delta: f64, horizon: u64) -> Result<Self> {
        let k = instance.k();
        let best = RankedList::identity(k);
        let min_gap = instance
            .alpha()
            .windows(2)
            .map(|w| w[0] - w[1])
            .fold(f64::INFINITY, f64::min);
        Ok(RegretBoundParts {
            k,
            chi_max: instance.model.examination_prob(&best, 0)?,
            chi_min: instance.model.examination_prob(&best, k - 1)?,
            min_gap: if k == 1 { f64::INFINITY } else { min_gap },
            v0_size,
            delta,
            horizon,
        })
    }

    /// `180 K (chi_max / chi_min) (K - 1 + 2 |V0|) / gap * ln(1/delta)
    ///  + sqrt(delta) K^3 n^2`.
    pub fn evaluate(&self) -> Result<f64> {
        if self.min_gap.is_nan() || self.min_gap <= 0.0 {
            return Err(Error::Domain(format!("minimum attraction gap {} is not positive", self.min_gap)));
        }
        if self.chi_min.is_nan() || self.chi_min <= 0.0 {
            return Err(Error::Domain("the last position is never examined".into()));
        }
        let radius = threshold(1, self.delta)?;
        let log_inv_delta = radius * radius / 4.0;
        let k = self.k as f64;
        let n = self.horizon as f64;
        let first = 180.0 * k * (self.chi_max / self.chi_min) * (k - 1.0 + 2.0 * self.v0_size as f64) / self.min_gap
            * log_inv_delta;
        Ok(first + self.delta.sqrt() * k.powi(3) * n * n)
    }
}

/// Regret ceiling for `horizon` steps from an initial list with `v0_size`
/// incorrectly ordered pairs.
pub fn regret_upper_bound(instance: &Instance, v0_size: usize, delta: f64, horizon: u64) -> Result<f64> {
    RegretBoundParts::for_instance(instance, v0_size, delta, horizon)?.evaluate()
}

/// Exhaustive search over all `K!` lists. Ties within rounding noise go to the
/// lexicographically smallest list.
pub fn brute_force_optimal(model: &ClickModel, cutoff: usize) -> Result<(RankedList, f64)> {
    let k = model.k();
    if k > MAX_EXACT_K {
        return Err(Error::Domain(format!("K = {k} exceeds the exhaustive-search limit of {MAX_EXACT_K}")));
    }
    if cutoff == 0 || cutoff > k {
        return Err(Error::Domain(format!("cutoff {cutoff} is outside 1..={k}")));
    }
    let mut perm: Vec<usize> = (0..k).collect();
    let mut best_perm = perm.clone();
    let mut best = model.expected_reward(&RankedList::from_indices(&perm)?, cutoff);
    let mut consider = |perm: &[usize]| {
        let list = RankedList::from_indices(perm).expect("heap's algorithm permutes");
        let r = model.expected_reward(&list, cutoff);
        if r > best + REWARD_TIE_TOLERANCE || (r >= best - REWARD_TIE_TOLERANCE && perm < best_perm.as_slice()) {
            best = best.max(r);
            best_perm.clear();
            best_perm.extend_from_slice(perm);
        }
    };
    // Heap's algorithm, iterative form.
    let mut c = vec![0usize; k];
    let mut idx = 1;
    while idx < k {
        if c[idx] < idx {
            if idx % 2 == 0 {
                perm.swap(0, idx);
            } else {
                perm.swap(c[idx], idx);
            }
            consider(&perm);
            c[idx] += 1;
            idx = 1;
        } else {
            c[idx] = 0;
            idx += 1;
        }
    }
    let list = RankedList::from_indices(&best_perm)?;
    let reward = model.expected_reward(&list, cutoff);
    Ok((list, reward))
}

/// Instant regret of `list` and its ceiling `K * chi_max * gap(list)`.
pub fn gap_regret_check(model: &ClickModel, list: &RankedList) -> Result<(f64, f64)> {
    let k = model.k();
    let best = RankedList::identity(k);
    let optimal = model.expected_reward(&best, k);
    let chi_max = model.examination_prob(&best, 0)?;
    let regret = instant_regret(model, optimal, list, k);
    Ok((regret, k as f64 * chi_max * attraction_gap(list, model.alpha())))
}
