//! The BubbleRank learner.
//!
//! BubbleRank keeps a base list and, at every step, displays a copy of it in
//! which some adjacent pairs are exchanged at random. Odd steps consider the
//! pairs at positions (2, 3), (4, 5), ...; even steps the pairs at (1, 2),
//! (3, 4), .... A pair is only randomized while its click-difference
//! statistic is still within the confidence threshold. Clicks on exactly one
//! item of a randomized pair update the pair's statistics, and a lower-ranked
//! item that beats its upper neighbor with confidence is permanently moved up
//! in the base list.

use rand::{Rng, RngCore};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::click_model::Instance;
use crate::error::{Error, Result};
use crate::list::{Item, RankedList};

/// Which adjacent pairs feed the click-difference statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateScope {
    /// Only pairs that passed the randomization test this step.
    #[default]
    RandomizedOnly,
    /// Every adjacent pair considered this step, randomized or not.
    AllAdjacent,
}

/// How the confidence parameter `delta` is chosen.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub enum DeltaPolicy {
    /// `delta = n^-4` for the (estimated) horizon `n`.
    #[default]
    Auto,
    Fixed(f64),
}

impl DeltaPolicy {
    pub fn resolve(self, horizon: u64) -> Result<f64> {
        match self {
            DeltaPolicy::Auto => Ok(delta_for_horizon(horizon)),
            DeltaPolicy::Fixed(d) => {
                check_delta(d)?;
                Ok(d)
            }
        }
    }
}

impl Serialize for DeltaPolicy {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            DeltaPolicy::Auto => s.serialize_str("auto"),
            DeltaPolicy::Fixed(d) => s.serialize_f64(*d),
        }
    }
}

impl<'de> Deserialize<'de> for DeltaPolicy {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Name(String),
            Value(f64),
        }
        match Raw::deserialize(d)? {
            Raw::Name(s) if s == "auto" => Ok(DeltaPolicy::Auto),
            Raw::Name(s) => Err(serde::de::Error::custom(format!("unknown delta policy {s:?}"))),
            Raw::Value(v) if v > 0.0 && v < 1.0 => Ok(DeltaPolicy::Fixed(v)),
            Raw::Value(v) => Err(serde::de::Error::custom(format!("delta {v} is not in (0, 1)"))),
        }
    }
}

/// `n^-4`, with `n` raised to at least 2 so that the result lies in (0, 1).
pub fn delta_for_horizon(horizon: u64) -> f64 {
    (horizon.max(2) as f64).powi(-4)
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("delta = {delta} is not in (0, 1)")))
    }
}

/// The confidence radius `2 sqrt(count * ln(1/delta))`.
pub fn threshold(count: u64, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(radius(count, (1.0 / delta).ln()))
}

#[inline]
fn radius(count: u64, log_inv_delta: f64) -> f64 {
    2.0 * (count as f64 * log_inv_delta).sqrt()
}

/// `s <= radius(n)`, without the square root when `s` is not positive.
#[inline]
fn within_radius(s: i64, n: u64, log_inv_delta: f64) -> bool {
    s <= 0 || s as f64 <= radius(n, log_inv_delta)
}

/// Pairwise click-difference statistics.
///
/// `s(i, j)` sums `c(i) - c(j)` over the steps where exactly one of a
/// randomized pair was clicked; `n(i, j)` counts those steps.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PairStats {
    k: usize,
    s: Vec<i64>,
    n: Vec<u64>,
}

impl PairStats {
    pub fn new(k: usize) -> Self {
        PairStats { k, s: vec![0; k * k], n: vec![0; k * k] }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn s(&self, i: Item, j: Item) -> i64 {
        self.s[i.index() * self.k + j.index()]
    }

    #[inline]
    pub fn n(&self, i: Item, j: Item) -> u64 {
        self.n[i.index() * self.k + j.index()]
    }

    /// Records one observation where `winner` was clicked and `loser` was not.
    #[inline]
    pub fn record(&mut self, winner: Item, loser: Item) {
        let (w, l) = (winner.index(), loser.index());
        self.s[w * self.k + l] += 1;
        self.s[l * self.k + w] -= 1;
        self.n[w * self.k + l] += 1;
        self.n[l * self.k + w] += 1;
    }

    /// Antisymmetry of `s`, symmetry of `n` and `|s| <= n`.
    pub fn is_consistent(&self) -> bool {
        let k = self.k;
        (0..k).all(|i| {
            (0..k).all(|j| {
                let (a, b) = (i * k + j, j * k + i);
                self.s[a] == -self.s[b] && self.n[a] == self.n[b] && self.s[a].unsigned_abs() <= self.n[a]
            })
        })
    }

    pub fn s_matrix(&self) -> Vec<Vec<i64>> {
        self.s.chunks(self.k.max(1)).map(<[i64]>::to_vec).take(self.k).collect()
    }

    pub fn n_matrix(&self) -> Vec<Vec<u64>> {
        self.n.chunks(self.k.max(1)).map(<[u64]>::to_vec).take(self.k).collect()
    }

    pub fn from_matrices(s: Vec<Vec<i64>>, n: Vec<Vec<u64>>) -> Result<Self> {
        let k = s.len();
        if n.len() != k || s.iter().map(Vec::len).chain(n.iter().map(Vec::len)).any(|len| len != k) {
            return Err(Error::InvalidInstance("statistics must be square K x K matrices".into()));
        }
        let stats = PairStats { k, s: s.concat(), n: n.concat() };
        if !stats.is_consistent() {
            return Err(Error::InvalidInstance("statistics violate s(i,j) = -s(j,i), n(i,j) = n(j,i)".into()));
        }
        Ok(stats)
    }
}

/// An adjacent base-list pair that was randomized in a proposal.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RandomizedPair {
    /// Upper of the two positions (0-based).
    pub position: usize,
    /// Item ranked higher in the base list.
    pub upper: Item,
    /// Item ranked lower in the base list.
    pub lower: Item,
    /// Whether the two were exchanged in the displayed list.
    pub exchanged: bool,
}

/// The list to display at one step and the pairs randomized in it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ProposedAction {
    pub displayed: RankedList,
    /// Parity of the step: pairs start at positions `parity, parity + 2, ...`.
    pub parity: usize,
    pub randomized: Vec<RandomizedPair>,
}

impl ProposedAction {
    /// Randomized pairs as `(higher-ranked, lower-ranked)` in the base list.
    pub fn randomized_pairs(&self) -> impl Iterator<Item = (Item, Item)> + '_ {
        self.randomized.iter().map(|p| (p.upper, p.lower))
    }
}

/// The learner's entire memory: base list, statistics, `delta` and step.
#[derive(Clone, Debug, PartialEq)]
pub struct BubbleRankState {
    base: RankedList,
    stats: PairStats,
    delta: f64,
    log_inv_delta: f64,
    t: u64,
    scope: UpdateScope,
    promotions: u64,
    backward_promotions: u64,
}

impl BubbleRankState {
    pub fn new(initial: RankedList, delta: f64) -> Result<Self> {
        check_delta(delta)?;
        let k = initial.len();
        Ok(BubbleRankState {
            base: initial,
            stats: PairStats::new(k),
            delta,
            log_inv_delta: (1.0 / delta).ln(),
            t: 1,
            scope: UpdateScope::default(),
            promotions: 0,
            backward_promotions: 0,
        })
    }

    pub fn with_scope(mut self, scope: UpdateScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn base_list(&self) -> &RankedList {
        &self.base
    }

    pub fn stats(&self) -> &PairStats {
        &self.stats
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// The step the next proposal is for (starts at 1).
    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn scope(&self) -> UpdateScope {
        self.scope
    }

    /// Number of base-list exchanges made so far.
    pub fn promotions(&self) -> u64 {
        self.promotions
    }

    /// Exchanges that moved a higher label above a lower one. Under canonical
    /// labels these are exchanges in the wrong direction.
    pub fn backward_promotions(&self) -> u64 {
        self.backward_promotions
    }

    pub fn set_delta(&mut self, delta: f64) -> Result<()> {
        check_delta(delta)?;
        self.delta = delta;
        self.log_inv_delta = (1.0 / delta).ln();
        Ok(())
    }

    /// Replaces the base list, keeping the statistics.
    pub fn reset_base(&mut self, list: &RankedList) -> Result<()> {
        if list.len() != self.base.len() {
            return Err(Error::ContractViolation(format!(
                "reset list has {} items, state has {}",
                list.len(),
                self.base.len()
            )));
        }
        self.base.clone_from(list);
        Ok(())
    }

    pub fn propose<R: Rng + ?Sized>(&self, rng: &mut R) -> ProposedAction {
        let mut action = ProposedAction {
            displayed: self.base.clone(),
            parity: 0,
            randomized: Vec::with_capacity(self.base.len() / 2),
        };
        self.propose_into(rng, &mut action);
        action
    }

    /// Writes the proposal for step `t` into `action`, reusing its buffers.
    pub fn propose_into<R: Rng + ?Sized>(&self, rng: &mut R, action: &mut ProposedAction) {
        let h = (self.t % 2) as usize;
        action.parity = h;
        action.randomized.clear();
        action.displayed.clone_from(&self.base);

        let k = self.base.len();
        let mut coins = 0u64;
        let mut coins_left = 0u32;
        let mut pos = h;
        while pos + 1 < k {
            let upper = self.base.item_at(pos);
            let lower = self.base.item_at(pos + 1);
            if within_radius(self.stats.s(upper, lower), self.stats.n(upper, lower), self.log_inv_delta) {
                if coins_left == 0 {
                    coins = rng.next_u64();
                    coins_left = 64;
                }
                let exchanged = coins & 1 == 1;
                coins >>= 1;
                coins_left -= 1;
                if exchanged {
                    action.displayed.exchange(pos);
                }
                action.randomized.push(RandomizedPair { position: pos, upper, lower, exchanged });
            }
            pos += 2;
        }
    }

    /// Folds the clicks on `action.displayed` into the statistics, promotes
    /// items in the base list and advances the step counter.
    pub fn update(&mut self, action: &ProposedAction, clicks: &[bool]) -> Result<()> {
        let k = self.base.len();
        if clicks.len() != k {
            return Err(Error::ContractViolation(format!("click vector has {} entries, K = {k}", clicks.len())));
        }
        if action.displayed.len() != k {
            return Err(Error::ContractViolation("proposal does not match the state".into()));
        }

        let shown = &action.displayed;
        let mut observe = |pos: usize| {
            if clicks[pos] != clicks[pos + 1] {
                let (a, b) = (shown.item_at(pos), shown.item_at(pos + 1));
                if clicks[pos] {
                    self.stats.record(a, b);
                } else {
                    self.stats.record(b, a);
                }
            }
        };
        match self.scope {
            UpdateScope::RandomizedOnly => {
                for pair in &action.randomized {
                    observe(pair.position);
                }
            }
            UpdateScope::AllAdjacent => {
                let mut pos = action.parity;
                while pos + 1 < k {
                    observe(pos);
                    pos += 2;
                }
            }
        }

        for pos in 0..k.saturating_sub(1) {
            let upper = self.base.item_at(pos);
            let lower = self.base.item_at(pos + 1);
            if !within_radius(self.stats.s(lower, upper), self.stats.n(lower, upper), self.log_inv_delta) {
                self.base.exchange(pos);
                self.promotions += 1;
                self.backward_promotions += u64::from(lower.index() > upper.index());
            }
        }

        self.t += 1;
        Ok(())
    }

    pub fn snapshot(&self) -> StateSnapshot {
        StateSnapshot {
            base_list: self.base.clone(),
            s: self.stats.s_matrix(),
            n: self.stats.n_matrix(),
            delta: self.delta,
            t: self.t,
            update_scope: self.scope,
            promotions: self.promotions,
            backward_promotions: self.backward_promotions,
        }
    }

    pub fn from_snapshot(snap: StateSnapshot) -> Result<Self> {
        let stats = PairStats::from_matrices(snap.s, snap.n)?;
        if stats.k() != snap.base_list.len() {
            return Err(Error::InvalidInstance("statistics and base list disagree on K".into()));
        }
        if snap.t == 0 {
            return Err(Error::InvalidInstance("step counter starts at 1".into()));
        }
        let mut state = BubbleRankState::new(snap.base_list, snap.delta)?.with_scope(snap.update_scope);
        state.stats = stats;
        state.t = snap.t;
        state.promotions = snap.promotions;
        state.backward_promotions = snap.backward_promotions;
        Ok(state)
    }
}

/// JSON checkpoint of a [`BubbleRankState`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateSnapshot {
    pub base_list: RankedList,
    pub s: Vec<Vec<i64>>,
    pub n: Vec<Vec<u64>>,
    pub delta: f64,
    pub t: u64,
    #[serde(default)]
    pub update_scope: UpdateScope,
    #[serde(default)]
    pub promotions: u64,
    #[serde(default)]
    pub backward_promotions: u64,
}

impl StateSnapshot {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("snapshot serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// BubbleRank for an unknown horizon.
///
/// Runs with an estimated horizon `n`; at step `n + 1` the base list returns
/// to the initial list, `n` doubles and `delta` is recomputed. Statistics are
/// kept across restarts.
#[derive(Clone, Debug)]
pub struct DoublingBubbleRank {
    state: BubbleRankState,
    initial: RankedList,
    horizon: u64,
    policy: DeltaPolicy,
    resets: Vec<u64>,
}

impl DoublingBubbleRank {
    pub fn new(initial: RankedList, horizon_estimate: u64, policy: DeltaPolicy) -> Result<Self> {
        if horizon_estimate == 0 {
            return Err(Error::Domain("horizon estimate must be at least 1".into()));
        }
        let state = BubbleRankState::new(initial.clone(), policy.resolve(horizon_estimate)?)?;
        Ok(DoublingBubbleRank { state, initial, horizon: horizon_estimate, policy, resets: Vec::new() })
    }

    pub fn with_scope(mut self, scope: UpdateScope) -> Self {
        self.state = self.state.with_scope(scope);
        self
    }

    pub fn state(&self) -> &BubbleRankState {
        &self.state
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    /// Steps at which the base list was reset.
    pub fn resets(&self) -> &[u64] {
        &self.resets
    }

    fn roll_horizon(&mut self) -> Result<()> {
        if self.state.t() == self.horizon + 1 {
            self.state.reset_base(&self.initial)?;
            self.horizon *= 2;
            self.state.set_delta(self.policy.resolve(self.horizon)?)?;
            self.resets.push(self.state.t());
        }
        Ok(())
    }

    pub fn propose_into<R: Rng + ?Sized>(&mut self, rng: &mut R, action: &mut ProposedAction) -> Result<()> {
        self.roll_horizon()?;
        self.state.propose_into(rng, action);
        Ok(())
    }

    pub fn update(&mut self, action: &ProposedAction, clicks: &[bool]) -> Result<()> {
        self.state.update(action, clicks)
    }
}

/// One recorded point of a doubling-trick run.
#[derive(Clone, Debug, PartialEq)]
pub struct DoublingCheckpoint {
    pub step: u64,
    pub base_list: RankedList,
    pub delta: f64,
    pub stats: PairStats,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DoublingTrajectory {
    pub resets: Vec<u64>,
    pub checkpoints: Vec<DoublingCheckpoint>,
}

/// Runs the doubling-trick learner for `steps` steps against the instance's
/// user model, recording the state after each step listed in `checkpoints`.
pub fn run_with_doubling<R: RngCore>(
    instance: &Instance,
    horizon_estimate: u64,
    policy: DeltaPolicy,
    steps: u64,
    checkpoints: &[u64],
    rng: &mut R,
) -> Result<DoublingTrajectory> {
    let mut learner = DoublingBubbleRank::new(instance.initial_list.clone(), horizon_estimate, policy)?;
    let mut action = learner.state.propose(rng);
    let mut clicks = vec![false; instance.k()];
    let mut recorded = Vec::new();
    let mut next = checkpoints.iter().copied().filter(|&c| c >= 1 && c <= steps).peekable();
    for t in 1..=steps {
        learner.propose_into(rng, &mut action)?;
        instance.model.sample_clicks_into(&action.displayed, rng, &mut clicks);
        learner.update(&action, &clicks)?;
        while next.peek() == Some(&t) {
            next.next();
            recorded.push(DoublingCheckpoint {
                step: t,
                base_list: learner.state.base_list().clone(),
                delta: learner.state.delta(),
                stats: learner.state.stats().clone(),
            });
        }
    }
    Ok(DoublingTrajectory { resets: learner.resets, checkpoints: recorded })
}
