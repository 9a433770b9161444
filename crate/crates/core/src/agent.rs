//! The agent contract and the agents the harness can run.
//!
//! Agents are built from an [`AgentView`], which carries no click-model
//! parameters: clicks are their only feedback. The oracle agent is the one
//! exception and is constructed from the model directly.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::bubblerank::{BubbleRankState, DeltaPolicy, DoublingBubbleRank, PairStats, ProposedAction, UpdateScope};
use crate::click_model::ClickModel;
use crate::error::{Error, Result};
use crate::list::RankedList;
use crate::SimRng;

/// What an agent may know about the problem.
#[derive(Clone, Debug)]
pub struct AgentView {
    pub k: usize,
    pub initial_list: RankedList,
    pub horizon: Option<u64>,
    pub delta: Option<f64>,
}

impl AgentView {
    pub fn new(initial_list: RankedList) -> Self {
        AgentView { k: initial_list.len(), initial_list, horizon: None, delta: None }
    }

    pub fn with_horizon(mut self, horizon: u64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn with_delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }
}

pub trait Agent: Send {
    fn kind(&self) -> AgentKind;

    /// Chooses the list to display at step `t` (starting at 1) and writes it
    /// into `out`.
    fn act(&mut self, t: u64, rng: &mut SimRng, out: &mut RankedList) -> Result<()>;

    /// Receives the clicks on the list displayed by the last `act`.
    fn feedback(&mut self, displayed: &RankedList, clicks: &[bool]) -> Result<()>;

    fn base_list(&self) -> Option<&RankedList> {
        None
    }

    fn pair_stats(&self) -> Option<&PairStats> {
        None
    }

    /// Number of base-list exchanges, for learners that keep a base list.
    fn promotions(&self) -> Option<u64> {
        None
    }

    /// Base-list exchanges that placed a higher label above a lower one.
    fn backward_promotions(&self) -> Option<u64> {
        None
    }

    /// The learner's current confidence parameter.
    fn delta(&self) -> Option<f64> {
        None
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AgentKind {
    BubbleRank,
    BubbleRankDoubling,
    Static,
    Uniform,
    Oracle,
}

impl AgentKind {
    pub const ALL: [AgentKind; 5] = [
        AgentKind::BubbleRank,
        AgentKind::BubbleRankDoubling,
        AgentKind::Static,
        AgentKind::Uniform,
        AgentKind::Oracle,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AgentKind::BubbleRank => "bubblerank",
            AgentKind::BubbleRankDoubling => "bubblerank-doubling",
            AgentKind::Static => "static",
            AgentKind::Uniform => "uniform",
            AgentKind::Oracle => "oracle",
        }
    }
}

impl fmt::Display for AgentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AgentKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        AgentKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown agent {s:?}")))
    }
}

impl Serialize for AgentKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for AgentKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        name.parse().map_err(serde::de::Error::custom)
    }
}

/// Always displays the initial list.
#[derive(Clone, Debug)]
pub struct StaticAgent {
    list: RankedList,
}

impl StaticAgent {
    pub fn new(view: &AgentView) -> Self {
        StaticAgent { list: view.initial_list.clone() }
    }
}

impl Agent for StaticAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Static
    }

    fn act(&mut self, _t: u64, _rng: &mut SimRng, out: &mut RankedList) -> Result<()> {
        out.clone_from(&self.list);
        Ok(())
    }

    fn feedback(&mut self, _displayed: &RankedList, _clicks: &[bool]) -> Result<()> {
        Ok(())
    }
}

/// Displays a uniformly random permutation at every step. An unsafe explorer.
#[derive(Clone, Debug)]
pub struct UniformShuffleAgent {
    k: usize,
}

impl UniformShuffleAgent {
    pub fn new(view: &AgentView) -> Self {
        UniformShuffleAgent { k: view.k }
    }
}

impl Agent for UniformShuffleAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Uniform
    }

    fn act(&mut self, _t: u64, rng: &mut SimRng, out: &mut RankedList) -> Result<()> {
        if out.len() != self.k {
            *out = RankedList::identity(self.k);
        }
        out.shuffle(rng);
        Ok(())
    }

    fn feedback(&mut self, _displayed: &RankedList, _clicks: &[bool]) -> Result<()> {
        Ok(())
    }
}

/// Plays the optimal list of a known model. Diagnostic only.
#[derive(Clone, Debug)]
pub struct OracleAgent {
    list: RankedList,
}

impl OracleAgent {
    pub fn new(model: &ClickModel, cutoff: usize) -> Result<Self> {
        if cutoff == 0 || cutoff > model.k() {
            return Err(Error::Domain(format!("cutoff {cutoff} is outside 1..={}", model.k())));
        }
        Ok(OracleAgent { list: model.optimal_reward(cutoff).0 })
    }
}

impl Agent for OracleAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::Oracle
    }

    fn act(&mut self, _t: u64, _rng: &mut SimRng, out: &mut RankedList) -> Result<()> {
        out.clone_from(&self.list);
        Ok(())
    }

    fn feedback(&mut self, _displayed: &RankedList, _clicks: &[bool]) -> Result<()> {
        Ok(())
    }
}

/// BubbleRank with a known horizon.
#[derive(Clone, Debug)]
pub struct BubbleRankAgent {
    state: BubbleRankState,
    action: ProposedAction,
}

impl BubbleRankAgent {
    /// Uses `view.delta` if set, otherwise `n^-4` for `view.horizon`.
    pub fn new(view: &AgentView, scope: UpdateScope) -> Result<Self> {
        let delta = match (view.delta, view.horizon) {
            (Some(d), _) => d,
            (None, Some(n)) => DeltaPolicy::Auto.resolve(n)?,
            (None, None) => {
                return Err(Error::InvalidConfig("bubblerank needs either delta or a horizon".into()))
            }
        };
        let state = BubbleRankState::new(view.initial_list.clone(), delta)?.with_scope(scope);
        let action = ProposedAction {
            displayed: view.initial_list.clone(),
            parity: 0,
            randomized: Vec::with_capacity(view.k / 2 + 1),
        };
        Ok(BubbleRankAgent { state, action })
    }

    pub fn state(&self) -> &BubbleRankState {
        &self.state
    }

    pub fn last_action(&self) -> &ProposedAction {
        &self.action
    }
}

impl Agent for BubbleRankAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::BubbleRank
    }

    fn act(&mut self, _t: u64, rng: &mut SimRng, out: &mut RankedList) -> Result<()> {
        self.state.propose_into(rng, &mut self.action);
        out.clone_from(&self.action.displayed);
        Ok(())
    }

    fn feedback(&mut self, displayed: &RankedList, clicks: &[bool]) -> Result<()> {
        if displayed != &self.action.displayed {
            return Err(Error::ContractViolation("feedback for a list this agent did not propose".into()));
        }
        self.state.update(&self.action, clicks)
    }

    fn base_list(&self) -> Option<&RankedList> {
        Some(self.state.base_list())
    }

    fn pair_stats(&self) -> Option<&PairStats> {
        Some(self.state.stats())
    }

    fn promotions(&self) -> Option<u64> {
        Some(self.state.promotions())
    }

    fn backward_promotions(&self) -> Option<u64> {
        Some(self.state.backward_promotions())
    }

    fn delta(&self) -> Option<f64> {
        Some(self.state.delta())
    }
}

/// BubbleRank with the doubling trick, for an unknown horizon.
#[derive(Clone, Debug)]
pub struct DoublingBubbleRankAgent {
    learner: DoublingBubbleRank,
    action: ProposedAction,
}

impl DoublingBubbleRankAgent {
    pub fn new(
        view: &AgentView,
        initial_horizon: u64,
        policy: DeltaPolicy,
        scope: UpdateScope,
    ) -> Result<Self> {
        let learner = DoublingBubbleRank::new(view.initial_list.clone(), initial_horizon, policy)?.with_scope(scope);
        let action = ProposedAction {
            displayed: view.initial_list.clone(),
            parity: 0,
            randomized: Vec::with_capacity(view.k / 2 + 1),
        };
        Ok(DoublingBubbleRankAgent { learner, action })
    }

    pub fn learner(&self) -> &DoublingBubbleRank {
        &self.learner
    }
}

impl Agent for DoublingBubbleRankAgent {
    fn kind(&self) -> AgentKind {
        AgentKind::BubbleRankDoubling
    }

    fn act(&mut self, _t: u64, rng: &mut SimRng, out: &mut RankedList) -> Result<()> {
        self.learner.propose_into(rng, &mut self.action)?;
        out.clone_from(&self.action.displayed);
        Ok(())
    }

    fn feedback(&mut self, displayed: &RankedList, clicks: &[bool]) -> Result<()> {
        if displayed != &self.action.displayed {
            return Err(Error::ContractViolation("feedback for a list this agent did not propose".into()));
        }
        self.learner.update(&self.action, clicks)
    }

    fn base_list(&self) -> Option<&RankedList> {
        Some(self.learner.state().base_list())
    }

    fn pair_stats(&self) -> Option<&PairStats> {
        Some(self.learner.state().stats())
    }

    fn promotions(&self) -> Option<u64> {
        Some(self.learner.state().promotions())
    }

    fn backward_promotions(&self) -> Option<u64> {
        Some(self.learner.state().backward_promotions())
    }

    fn delta(&self) -> Option<f64> {
        Some(self.learner.state().delta())
    }
}

/// Settings shared by the learners.
#[derive(Clone, Copy, Debug)]
pub struct LearnerSettings {
    pub scope: UpdateScope,
    pub delta: DeltaPolicy,
    pub doubling_initial_horizon: u64,
}

impl Default for LearnerSettings {
    fn default() -> Self {
        LearnerSettings { scope: UpdateScope::default(), delta: DeltaPolicy::Auto, doubling_initial_horizon: 1000 }
    }
}

/// Builds any non-oracle agent from the view.
pub fn build_agent(kind: AgentKind, view: &AgentView, settings: &LearnerSettings) -> Result<Box<dyn Agent>> {
    Ok(match kind {
        AgentKind::BubbleRank => Box::new(BubbleRankAgent::new(view, settings.scope)?),
        AgentKind::BubbleRankDoubling => Box::new(DoublingBubbleRankAgent::new(
            view,
            settings.doubling_initial_horizon,
            settings.delta,
            settings.scope,
        )?),
        AgentKind::Static => Box::new(StaticAgent::new(view)),
        AgentKind::Uniform => Box::new(UniformShuffleAgent::new(view)),
        AgentKind::Oracle => {
            return Err(Error::InvalidConfig("the oracle agent is built from the click model".into()))
        }
    })
}
