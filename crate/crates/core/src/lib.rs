//! Safe online learning to re-rank: the BubbleRank learner, click-model
//! environments, baseline agents, metrics, analysis oracles and the
//! experiment harness.
//!
//! Items are 0-based internally; every external format (JSON, CSV, display)
//! uses 1-based labels. Instances are canonically labeled so that item 1 has
//! the largest attraction probability.

pub mod agent;
pub mod bubblerank;
pub mod click_model;
pub mod error;
pub mod harness;
pub mod list;
pub mod metrics;
pub mod oracle;

pub use agent::{build_agent, Agent, AgentKind, AgentView, LearnerSettings};
pub use bubblerank::{
    delta_for_horizon, threshold, BubbleRankState, DeltaPolicy, DoublingBubbleRank, PairStats, ProposedAction,
    StateSnapshot, UpdateScope,
};
pub use click_model::{build_sanity_pbm, ClickModel, Instance, InstanceFile, ModelKind};
pub use error::{Error, Result};
pub use list::{Item, PairSet, RankedList};

/// The random stream owned by one simulation run.
pub type SimRng = rand_chacha::ChaCha8Rng;
