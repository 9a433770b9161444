//! Simulated users: the cascade, position-based and dependent click models.
//!
//! Each model samples per-step clicks on a displayed list and evaluates the
//! exact expected reward of a list, truncated at a cutoff position:
//!
//! * cascade (CM): the user scans top-down and clicks the first attractive
//!   item, so the reward is the probability of a click;
//! * position-based (PBM): position `k` is examined independently with
//!   probability `chi[k]`, and the reward is the expected number of clicks;
//! * dependent click (DCM): the user scans top-down, clicks attractive items
//!   and, after a click at position `k`, leaves with probability `v[k]`. The
//!   reward is the probability that the session ends on such an abandonment
//!   click.

use std::fs;
use std::path::Path;

use rand::distr::{Bernoulli, Distribution};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::list::{Item, RankedList};

/// Largest `K` for which the optimal list is found by exhaustive search.
pub const MAX_EXACT_K: usize = 10;

/// Ties in expected reward closer than this are resolved towards the
/// lexicographically smaller list.
pub const REWARD_TIE_TOLERANCE: f64 = 1e-12;

fn check_probabilities(name: &str, values: &[f64]) -> Result<()> {
    if let Some((k, v)) = values.iter().enumerate().find(|(_, v)| !(0.0..=1.0).contains(*v)) {
        return Err(Error::InvalidInstance(format!("{name}[{}] = {v} is not a probability", k + 1)));
    }
    Ok(())
}

fn coins(values: &[f64]) -> Vec<Bernoulli> {
    values.iter().map(|&p| Bernoulli::new(p).expect("validated probability")).collect()
}

#[derive(Clone, Debug)]
pub struct CascadeModel {
    alpha: Vec<f64>,
    attract: Vec<Bernoulli>,
}

impl CascadeModel {
    pub fn new(alpha: Vec<f64>) -> Result<Self> {
        check_probabilities("alpha", &alpha)?;
        Ok(CascadeModel { attract: coins(&alpha), alpha })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }
}

#[derive(Clone, Debug)]
pub struct PositionBasedModel {
    alpha: Vec<f64>,
    chi: Vec<f64>,
    attract: Vec<Bernoulli>,
    examine: Vec<Bernoulli>,
}

impl PositionBasedModel {
    /// Rejects examination probabilities that increase with the position.
    pub fn new(alpha: Vec<f64>, chi: Vec<f64>) -> Result<Self> {
        check_probabilities("alpha", &alpha)?;
        check_probabilities("chi", &chi)?;
        if chi.len() != alpha.len() {
            return Err(Error::InvalidInstance(format!(
                "chi has {} entries, expected {}",
                chi.len(),
                alpha.len()
            )));
        }
        if let Some(k) = chi.windows(2).position(|w| w[1] > w[0]) {
            return Err(Error::InvalidInstance(format!(
                "chi is not non-increasing: chi[{}] = {} < chi[{}] = {}",
                k + 1,
                chi[k],
                k + 2,
                chi[k + 1]
            )));
        }
        Ok(PositionBasedModel { attract: coins(&alpha), examine: coins(&chi), alpha, chi })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn chi(&self) -> &[f64] {
        &self.chi
    }
}

#[derive(Clone, Debug)]
pub struct DependentClickModel {
    alpha: Vec<f64>,
    abandon: Vec<f64>,
    attract: Vec<Bernoulli>,
    leave: Vec<Bernoulli>,
}

impl DependentClickModel {
    /// `abandon[k]` is the probability of leaving after a click at position `k`.
    pub fn new(alpha: Vec<f64>, abandon: Vec<f64>) -> Result<Self> {
        check_probabilities("alpha", &alpha)?;
        check_probabilities("v", &abandon)?;
        if abandon.len() != alpha.len() {
            return Err(Error::InvalidInstance(format!(
                "v has {} entries, expected {}",
                abandon.len(),
                alpha.len()
            )));
        }
        Ok(DependentClickModel { attract: coins(&alpha), leave: coins(&abandon), alpha, abandon })
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    pub fn abandon(&self) -> &[f64] {
        &self.abandon
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Cm,
    Pbm,
    Dcm,
}

#[derive(Clone, Debug)]
pub enum ClickModel {
    Cascade(CascadeModel),
    PositionBased(PositionBasedModel),
    DependentClick(DependentClickModel),
}

impl From<CascadeModel> for ClickModel {
    fn from(m: CascadeModel) -> Self {
        ClickModel::Cascade(m)
    }
}

impl From<PositionBasedModel> for ClickModel {
    fn from(m: PositionBasedModel) -> Self {
        ClickModel::PositionBased(m)
    }
}

impl From<DependentClickModel> for ClickModel {
    fn from(m: DependentClickModel) -> Self {
        ClickModel::DependentClick(m)
    }
}

impl ClickModel {
    pub fn cascade(alpha: Vec<f64>) -> Result<Self> {
        CascadeModel::new(alpha).map(Into::into)
    }

    pub fn position_based(alpha: Vec<f64>, chi: Vec<f64>) -> Result<Self> {
        PositionBasedModel::new(alpha, chi).map(Into::into)
    }

    pub fn dependent_click(alpha: Vec<f64>, abandon: Vec<f64>) -> Result<Self> {
        DependentClickModel::new(alpha, abandon).map(Into::into)
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ClickModel::Cascade(_) => ModelKind::Cm,
            ClickModel::PositionBased(_) => ModelKind::Pbm,
            ClickModel::DependentClick(_) => ModelKind::Dcm,
        }
    }

    /// Number of items (and positions).
    pub fn k(&self) -> usize {
        self.alpha().len()
    }

    pub fn alpha(&self) -> &[f64] {
        match self {
            ClickModel::Cascade(m) => &m.alpha,
            ClickModel::PositionBased(m) => &m.alpha,
            ClickModel::DependentClick(m) => &m.alpha,
        }
    }

    /// Whether the descending-attraction list is known to maximize the reward.
    pub fn identity_is_optimal_by_assumption(&self) -> bool {
        let descending = self.alpha().windows(2).all(|w| w[0] >= w[1]);
        match self {
            ClickModel::Cascade(_) | ClickModel::PositionBased(_) => descending,
            ClickModel::DependentClick(_) => false,
        }
    }

    /// Examination probability of position `k`, its reward term, and the
    /// carried examination state for position `k + 1`.
    #[inline]
    fn position_term(&self, k: usize, item: Item, carry: f64) -> (f64, f64, f64) {
        match self {
            ClickModel::Cascade(m) => {
                let a = m.alpha[item.index()];
                (carry, carry * a, carry * (1.0 - a))
            }
            ClickModel::PositionBased(m) => {
                let x = m.chi[k];
                (x, x * m.alpha[item.index()], carry)
            }
            ClickModel::DependentClick(m) => {
                let va = m.abandon[k] * m.alpha[item.index()];
                (carry, carry * va, carry * (1.0 - va))
            }
        }
    }

    /// Samples clicks on `list` into `clicks`.
    ///
    /// Returns the position of the click on which the user ended the session:
    /// the click itself under CM, the abandonment click under DCM, and `None`
    /// under PBM or when the session ended without such a click.
    #[inline]
    pub fn sample_clicks_into<R: Rng + ?Sized>(
        &self,
        list: &RankedList,
        rng: &mut R,
        clicks: &mut [bool],
    ) -> Option<usize> {
        debug_assert_eq!(clicks.len(), list.len());
        clicks.fill(false);
        let items = list.items();
        match self {
            ClickModel::Cascade(m) => {
                for (k, item) in items.iter().enumerate() {
                    if m.attract[item.index()].sample(rng) {
                        clicks[k] = true;
                        return Some(k);
                    }
                }
                None
            }
            ClickModel::PositionBased(m) => {
                for (k, item) in items.iter().enumerate() {
                    clicks[k] = m.examine[k].sample(rng) && m.attract[item.index()].sample(rng);
                }
                None
            }
            ClickModel::DependentClick(m) => {
                for (k, item) in items.iter().enumerate() {
                    if m.attract[item.index()].sample(rng) {
                        clicks[k] = true;
                        if m.leave[k].sample(rng) {
                            return Some(k);
                        }
                    }
                }
                None
            }
        }
    }

    pub fn sample_clicks<R: Rng + ?Sized>(&self, list: &RankedList, rng: &mut R) -> Vec<bool> {
        let mut clicks = vec![false; list.len()];
        self.sample_clicks_into(list, rng, &mut clicks);
        clicks
    }

    /// Exact expected reward of `list` over positions `0..cutoff`.
    ///
    /// Panics unless `1 <= cutoff <= K` and `list` has `K` items.
    #[inline]
    pub fn expected_reward(&self, list: &RankedList, cutoff: usize) -> f64 {
        assert!(cutoff >= 1 && cutoff <= self.k() && list.len() == self.k());
        let mut carry = 1.0;
        let mut reward = 0.0;
        for (k, &item) in list.items()[..cutoff].iter().enumerate() {
            let (_, term, next) = self.position_term(k, item, carry);
            reward += term;
            carry = next;
        }
        reward
    }

    /// Exact probability that position `k` (0-based) of `list` is examined.
    pub fn examination_prob(&self, list: &RankedList, k: usize) -> Result<f64> {
        if k >= list.len() || list.len() != self.k() {
            return Err(Error::PositionOutOfRange { position: k, len: list.len() });
        }
        let mut carry = 1.0;
        for (pos, &item) in list.items()[..k].iter().enumerate() {
            carry = self.position_term(pos, item, carry).2;
        }
        Ok(self.position_term(k, list.item_at(k), carry).0)
    }

    /// The optimal list and its expected reward at `cutoff`.
    ///
    /// For `K <= 10` this searches every ordering of the first `cutoff`
    /// positions (the remaining positions do not affect the reward and are
    /// filled in ascending item order). Near-ties go to the lexicographically
    /// smaller list. For larger `K` the descending-attraction list is returned.
    pub fn optimal_reward(&self, cutoff: usize) -> (RankedList, f64) {
        let k = self.k();
        if k > MAX_EXACT_K {
            if !self.identity_is_optimal_by_assumption() {
                log::warn!(
                    "K = {k} is too large for exhaustive search; assuming (1, ..., K) is optimal \
                     although the model does not guarantee it"
                );
            }
            let list = RankedList::identity(k);
            let reward = self.expected_reward(&list, cutoff);
            return (list, reward);
        }

        let mut search = PrefixSearch {
            model: self,
            cutoff,
            prefix: Vec::with_capacity(cutoff),
            best_prefix: Vec::new(),
            best: f64::NEG_INFINITY,
        };
        search.descend(0u32, 0.0, 1.0);
        let mut order: Vec<usize> = search.best_prefix.clone();
        order.extend((0..k).filter(|i| !search.best_prefix.contains(i)));
        let list = RankedList::from_indices(&order).expect("search yields a permutation");
        let reward = self.expected_reward(&list, cutoff);
        (list, reward)
    }
}

struct PrefixSearch<'a> {
    model: &'a ClickModel,
    cutoff: usize,
    prefix: Vec<usize>,
    best_prefix: Vec<usize>,
    best: f64,
}

impl PrefixSearch<'_> {
    // Items are tried in ascending order, so the first list to reach a reward
    // is the lexicographically smallest one with that reward.
    fn descend(&mut self, used: u32, reward: f64, carry: f64) {
        let depth = self.prefix.len();
        if depth == self.cutoff {
            if reward > self.best + REWARD_TIE_TOLERANCE {
                self.best = reward;
                self.best_prefix.clone_from(&self.prefix);
            }
            return;
        }
        for i in 0..self.model.k() {
            if used & (1 << i) != 0 {
                continue;
            }
            let (_, term, next) = self.model.position_term(depth, Item::new(i), carry);
            self.prefix.push(i);
            self.descend(used | (1 << i), reward + term, next);
            self.prefix.pop();
        }
    }
}

/// One problem instance: a user model, the initial list and the metric cutoff.
///
/// Items are canonically labeled (descending attraction); `original_labels`
/// maps each canonical item back to the label it had in the source file.
#[derive(Clone, Debug)]
pub struct Instance {
    pub id: String,
    pub model: ClickModel,
    pub initial_list: RankedList,
    pub eval_cutoff: usize,
    pub original_labels: Vec<usize>,
}

/// On-disk instance schema.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceFile {
    pub id: String,
    pub model: ModelKind,
    #[serde(rename = "K")]
    pub k: usize,
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v: Option<Vec<f64>>,
    pub initial_list: Vec<usize>,
    pub eval_cutoff: usize,
}

impl Instance {
    /// Builds an instance whose labels are already canonical.
    pub fn new(
        id: impl Into<String>,
        model: ClickModel,
        initial_list: RankedList,
        eval_cutoff: usize,
    ) -> Result<Self> {
        let k = model.k();
        if initial_list.len() != k {
            return Err(Error::InvalidInstance(format!(
                "initial list has {} items, model has {k}",
                initial_list.len()
            )));
        }
        if eval_cutoff == 0 || eval_cutoff > k {
            return Err(Error::InvalidInstance(format!("eval_cutoff {eval_cutoff} is outside 1..={k}")));
        }
        Ok(Instance {
            id: id.into(),
            model,
            initial_list,
            eval_cutoff,
            original_labels: (1..=k).collect(),
        })
    }

    pub fn k(&self) -> usize {
        self.model.k()
    }

    pub fn alpha(&self) -> &[f64] {
        self.model.alpha()
    }

    /// Relabels the file's items into descending-attraction order and
    /// validates the model.
    pub fn from_file_schema(file: InstanceFile) -> Result<Self> {
        let k = file.k;
        if k == 0 {
            return Err(Error::InvalidInstance("K must be positive".into()));
        }
        if file.alpha.len() != k {
            return Err(Error::InvalidInstance(format!("alpha has {} entries, K = {k}", file.alpha.len())));
        }
        check_probabilities("alpha", &file.alpha)?;
        // order[c] = original 0-based index of canonical item c
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| file.alpha[b].total_cmp(&file.alpha[a]));
        let mut canonical = vec![0; k];
        for (c, &orig) in order.iter().enumerate() {
            canonical[orig] = c;
        }
        let alpha: Vec<f64> = order.iter().map(|&o| file.alpha[o]).collect();

        let model = match file.model {
            ModelKind::Cm => ClickModel::cascade(alpha)?,
            ModelKind::Pbm => {
                let chi = file
                    .chi
                    .ok_or_else(|| Error::InvalidInstance("pbm instance needs \"chi\"".into()))?;
                ClickModel::position_based(alpha, chi)?
            }
            ModelKind::Dcm => {
                let v = file
                    .v
                    .ok_or_else(|| Error::InvalidInstance("dcm instance needs \"v\"".into()))?;
                ClickModel::dependent_click(alpha, v)?
            }
        };

        if file.initial_list.len() != k {
            return Err(Error::InvalidInstance(format!(
                "initial_list has {} entries, K = {k}",
                file.initial_list.len()
            )));
        }
        let relabeled = file
            .initial_list
            .iter()
            .map(|&label| {
                if label == 0 || label > k {
                    Err(Error::ItemOutOfRange { label, k })
                } else {
                    Ok(canonical[label - 1])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let initial_list = RankedList::from_indices(&relabeled)?;

        let mut instance = Instance::new(file.id, model, initial_list, file.eval_cutoff)?;
        instance.original_labels = order.iter().map(|o| o + 1).collect();
        Ok(instance)
    }

    /// The instance in file form, with canonical labels.
    pub fn to_file_schema(&self) -> InstanceFile {
        let (chi, v) = match &self.model {
            ClickModel::Cascade(_) => (None, None),
            ClickModel::PositionBased(m) => (Some(m.chi.clone()), None),
            ClickModel::DependentClick(m) => (None, Some(m.abandon.clone())),
        };
        InstanceFile {
            id: self.id.clone(),
            model: self.model.kind(),
            k: self.k(),
            alpha: self.alpha().to_vec(),
            chi,
            v,
            initial_list: self.initial_list.labels(),
            eval_cutoff: self.eval_cutoff,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file_schema(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Json(e) => Error::InvalidInstance(format!("{}: {e}", path.display())),
            other => other,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&self.to_file_schema()).expect("instance serializes")
    }
}

/// Synthetic PBM where the most attractive item starts at the bottom, behind
/// two weakly examined positions with examination probability `0.5^i`.
pub fn build_sanity_pbm(i: u32) -> Result<Instance> {
    if i == 0 {
        return Err(Error::Domain("sanity PBM exponent must be at least 1".into()));
    }
    const K: usize = 10;
    let mut alpha = vec![0.5; K];
    alpha[0] = 0.9;
    let low = 0.5f64.powi(i as i32);
    let mut chi = vec![0.9; K];
    chi[K - 2] = low;
    chi[K - 1] = low;
    // (2, 3, ..., K, 1)
    let order: Vec<usize> = (1..K).chain(std::iter::once(0)).collect();
    Instance::new(
        format!("sanity-pbm-chi-{i}"),
        ClickModel::position_based(alpha, chi)?,
        RankedList::from_indices(&order)?,
        5,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn list(labels: &[usize]) -> RankedList {
        RankedList::from_labels(labels).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    /// Exact reward by enumerating every attraction realization (CM) .
    fn cm_reward_by_enumeration(alpha: &[f64], l: &RankedList, cutoff: usize) -> f64 {
        let k = alpha.len();
        let mut total = 0.0;
        for mask in 0u32..(1 << k) {
            let p: f64 = (0..k)
                .map(|i| if mask & (1 << i) != 0 { alpha[i] } else { 1.0 - alpha[i] })
                .product();
            let first = (0..k).find(|&pos| mask & (1 << l.item_at(pos).index()) != 0);
            if matches!(first, Some(pos) if pos < cutoff) {
                total += p;
            }
        }
        total
    }

    #[test]
    fn cascade_sure_click_stops_scan() {
        let m = ClickModel::cascade(vec![1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(m.sample_clicks(&list(&[1, 2]), &mut rng), vec![true, false]);
        }
    }

    #[test]
    fn pbm_zero_attraction_never_clicks() {
        let m = ClickModel::position_based(vec![0.0; 4], vec![1.0, 0.8, 0.5, 0.5]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            assert!(m.sample_clicks(&list(&[3, 1, 4, 2]), &mut rng).iter().all(|c| !c));
        }
    }

    #[test]
    fn dcm_certain_abandonment() {
        let m = ClickModel::dependent_click(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let mut c = [false; 2];
            assert_eq!(m.sample_clicks_into(&list(&[1, 2]), &mut rng, &mut c), Some(0));
            assert_eq!(c, [true, false]);
        }
    }

    #[test]
    fn cascade_at_most_one_click_and_dcm_prefix_pattern() {
        let cm = ClickModel::cascade(vec![0.6, 0.5, 0.4, 0.3]).unwrap();
        let dcm = ClickModel::dependent_click(vec![0.6, 0.5, 0.4, 0.3], vec![1.0; 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let l = list(&[2, 4, 1, 3]);
        for _ in 0..10_000 {
            assert!(cm.sample_clicks(&l, &mut rng).iter().filter(|&&c| c).count() <= 1);
            // v = 1: the first click is the abandonment click, nothing below it
            let c = dcm.sample_clicks(&l, &mut rng);
            if let Some(first) = c.iter().position(|&x| x) {
                assert!(c[first + 1..].iter().all(|&x| !x));
            }
        }
    }

    #[test]
    fn expected_reward_examples() {
        let cm = ClickModel::cascade(vec![0.5, 0.5]).unwrap();
        assert!(close(cm.expected_reward(&list(&[1, 2]), 2), 0.75));
        assert!(close(cm_reward_by_enumeration(&[0.5, 0.5], &list(&[1, 2]), 2), 0.75));

        let pbm = ClickModel::position_based(vec![0.8, 0.4], vec![1.0, 0.5]).unwrap();
        assert!(close(pbm.expected_reward(&list(&[2, 1]), 2), 0.8));

        let dcm = ClickModel::dependent_click(vec![0.5, 0.5], vec![1.0, 1.0]).unwrap();
        assert!(close(dcm.expected_reward(&list(&[1, 2]), 2), 0.75));
    }

    #[test]
    fn cascade_reward_matches_enumeration() {
        let alpha = [0.7, 0.45, 0.3, 0.2, 0.05];
        let cm = ClickModel::cascade(alpha.to_vec()).unwrap();
        let l = list(&[3, 5, 1, 4, 2]);
        for cutoff in 1..=5 {
            assert!(close(cm.expected_reward(&l, cutoff), cm_reward_by_enumeration(&alpha, &l, cutoff)));
        }
    }

    #[test]
    fn examination_examples() {
        let cm = ClickModel::cascade(vec![0.5, 0.3, 0.2]).unwrap();
        let dcm = ClickModel::dependent_click(vec![0.5, 0.3, 0.2], vec![0.7, 0.6, 0.5]).unwrap();
        let pbm = ClickModel::position_based(vec![0.5, 0.3], vec![0.9, 0.25]).unwrap();
        assert_eq!(cm.examination_prob(&list(&[1, 2, 3]), 0).unwrap(), 1.0);
        assert_eq!(dcm.examination_prob(&list(&[1, 2, 3]), 0).unwrap(), 1.0);
        assert_eq!(pbm.examination_prob(&list(&[1, 2]), 0).unwrap(), 0.9);
        assert!(close(cm.examination_prob(&list(&[1, 2, 3]), 1).unwrap(), 0.5));
        assert!(close(pbm.examination_prob(&list(&[2, 1]), 1).unwrap(), 0.25));
        // 1 - v(1) alpha(item at 1)
        assert!(close(dcm.examination_prob(&list(&[1, 2, 3]), 1).unwrap(), 1.0 - 0.7 * 0.5));
        assert!(cm.examination_prob(&list(&[1, 2, 3]), 3).is_err());
    }

    #[test]
    fn optimal_reward_examples() {
        let pbm = ClickModel::position_based(vec![0.8, 0.4], vec![1.0, 0.5]).unwrap();
        let (best, r) = pbm.optimal_reward(2);
        assert_eq!(best, list(&[1, 2]));
        assert!(close(r, 1.0));

        let cm = ClickModel::cascade(vec![0.9, 0.7, 0.6, 0.3, 0.2, 0.1]).unwrap();
        for cutoff in 1..=6 {
            assert!(cm.optimal_reward(cutoff).0.is_identity());
        }

        let single = ClickModel::position_based(vec![0.3], vec![0.5]).unwrap();
        let (best, r) = single.optimal_reward(1);
        assert_eq!(best, list(&[1]));
        assert!(close(r, 0.15));
    }

    #[test]
    fn optimal_reward_dominates_random_lists() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let models = [
            ClickModel::cascade(vec![0.8, 0.6, 0.5, 0.3, 0.2, 0.1]).unwrap(),
            ClickModel::position_based(vec![0.8, 0.6, 0.5, 0.3, 0.2, 0.1], vec![1.0, 0.7, 0.6, 0.4, 0.3, 0.1])
                .unwrap(),
            ClickModel::dependent_click(vec![0.8, 0.6, 0.5, 0.3, 0.2, 0.1], vec![0.2, 0.9, 0.4, 0.6, 0.5, 0.3])
                .unwrap(),
        ];
        for m in &models {
            for cutoff in [3, 6] {
                let (_, best) = m.optimal_reward(cutoff);
                for _ in 0..1000 {
                    let l = RankedList::random(6, &mut rng);
                    assert!(m.expected_reward(&l, cutoff) <= best + 1e-12);
                }
            }
        }
    }

    #[test]
    fn pbm_rejects_increasing_examination() {
        assert!(ClickModel::position_based(vec![0.5, 0.4], vec![0.5, 0.9]).is_err());
        assert!(ClickModel::cascade(vec![0.5, 1.2]).is_err());
        assert!(ClickModel::dependent_click(vec![0.5, 0.4], vec![0.5]).is_err());
    }

    #[test]
    fn sanity_pbm_parameters() {
        let one = build_sanity_pbm(1).unwrap();
        let ClickModel::PositionBased(m) = &one.model else { panic!("expected PBM") };
        assert_eq!(m.chi(), &[0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.9, 0.5, 0.5]);
        assert_eq!(m.alpha(), &[0.9, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5]);
        assert_eq!(one.initial_list.labels(), vec![2, 3, 4, 5, 6, 7, 8, 9, 10, 1]);

        let three = build_sanity_pbm(3).unwrap();
        let ClickModel::PositionBased(m) = &three.model else { panic!("expected PBM") };
        assert_eq!(&m.chi()[8..], &[0.125, 0.125]);
        for i in 1..=8 {
            let inst = build_sanity_pbm(i).unwrap();
            let ClickModel::PositionBased(m) = &inst.model else { panic!("expected PBM") };
            assert!(m.chi().windows(2).all(|w| w[0] >= w[1]));
        }
        assert!(build_sanity_pbm(0).is_err());
    }

    #[test]
    fn loader_relabels_to_descending_attraction() {
        let text = r#"{"id": "q1", "model": "pbm", "K": 3,
            "alpha": [0.2, 0.9, 0.5], "chi": [1.0, 0.6, 0.3],
            "initial_list": [1, 2, 3], "eval_cutoff": 2}"#;
        let inst = Instance::from_json(text).unwrap();
        assert_eq!(inst.alpha(), &[0.9, 0.5, 0.2]);
        assert_eq!(inst.original_labels, vec![2, 3, 1]);
        // original (1, 2, 3) = canonical (3, 1, 2)
        assert_eq!(inst.initial_list.labels(), vec![3, 1, 2]);
        assert_eq!(inst.initial_list.inversions(), 2);

        let again = Instance::from_json(&inst.to_json()).unwrap();
        assert_eq!(again.alpha(), inst.alpha());
        assert_eq!(again.initial_list, inst.initial_list);
    }

    #[test]
    fn loader_rejections() {
        let non_monotone = r#"{"id": "x", "model": "pbm", "K": 2, "alpha": [0.5, 0.4],
            "chi": [0.5, 0.9], "initial_list": [1, 2], "eval_cutoff": 2}"#;
        assert!(matches!(Instance::from_json(non_monotone), Err(Error::InvalidInstance(_))));
        let missing_v = r#"{"id": "x", "model": "dcm", "K": 2, "alpha": [0.5, 0.4],
            "initial_list": [1, 2], "eval_cutoff": 2}"#;
        assert!(Instance::from_json(missing_v).is_err());
        let bad_list = r#"{"id": "x", "model": "cm", "K": 2, "alpha": [0.5, 0.4],
            "initial_list": [1, 1], "eval_cutoff": 2}"#;
        assert!(Instance::from_json(bad_list).is_err());
        let bad_cutoff = r#"{"id": "x", "model": "cm", "K": 2, "alpha": [0.5, 0.4],
            "initial_list": [1, 2], "eval_cutoff": 3}"#;
        assert!(Instance::from_json(bad_cutoff).is_err());
    }
}
