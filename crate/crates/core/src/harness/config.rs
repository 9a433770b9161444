use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::agent::{AgentKind, LearnerSettings};
use crate::bubblerank::{DeltaPolicy, UpdateScope};
use crate::click_model::Instance;
use crate::error::{Error, Result};

fn default_checkpoint_ratio() -> f64 {
    1.2
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

fn default_doubling_initial_horizon() -> u64 {
    1000
}

/// Experiment settings, read from JSON.
///
/// Instance paths are resolved against the directory of the config file; the
/// output directory against the working directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub instances: Vec<PathBuf>,
    #[serde(default)]
    pub agents: Vec<AgentKind>,
    pub horizon: u64,
    pub runs: u32,
    pub seed: u64,
    #[serde(default)]
    pub delta: DeltaPolicy,
    /// Overrides every instance's own cutoff.
    #[serde(default)]
    pub eval_cutoff: Option<usize>,
    #[serde(default = "default_checkpoint_ratio")]
    pub checkpoint_ratio: f64,
    /// Steps recorded in addition to the geometric schedule.
    #[serde(default)]
    pub extra_checkpoints: Vec<u64>,
    #[serde(default)]
    pub update_scope: UpdateScope,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default = "default_doubling_initial_horizon")]
    pub doubling_initial_horizon: u64,
    /// Keep a copy of the pairwise statistics at every checkpoint.
    #[serde(default)]
    pub record_stats: bool,
    #[serde(default)]
    pub sweep: SweepConfig,
    #[serde(default)]
    pub verify: VerifyConfig,
}

/// Settings of the two sanity sweeps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Exponents `i` of the last two examination probabilities `0.5^i`.
    pub chi_levels: Vec<u32>,
    /// Random initial lists drawn for the initial-inversions sweep.
    pub initial_lists: usize,
    /// Also run from the optimal list.
    pub include_optimal: bool,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig { chi_levels: (1..=5).collect(), initial_lists: 10, include_optimal: true }
    }
}

/// Sizes of the oracle suites run by `verify`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub mc_instances_per_model: usize,
    pub mc_max_k: usize,
    pub mc_samples: u64,
    /// Agreement tolerance in standard errors.
    pub mc_z: f64,
    pub optimality_instances: usize,
    pub optimality_max_k: usize,
    pub drift_pairs: usize,
    pub drift_samples: u64,
    pub gap_lists: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            mc_instances_per_model: 50,
            mc_max_k: 5,
            mc_samples: 1_000_000,
            mc_z: 4.0,
            optimality_instances: 100,
            optimality_max_k: 7,
            drift_pairs: 20,
            drift_samples: 200_000,
            gap_lists: 1000,
        }
    }
}

impl ExperimentConfig {
    /// A config with defaults for everything but the grid size.
    pub fn new(horizon: u64, runs: u32, seed: u64) -> Self {
        ExperimentConfig {
            instances: Vec::new(),
            agents: Vec::new(),
            horizon,
            runs,
            seed,
            delta: DeltaPolicy::Auto,
            eval_cutoff: None,
            checkpoint_ratio: default_checkpoint_ratio(),
            extra_checkpoints: Vec::new(),
            update_scope: UpdateScope::default(),
            output_dir: default_output_dir(),
            doubling_initial_horizon: default_doubling_initial_horizon(),
            record_stats: false,
            sweep: SweepConfig::default(),
            verify: VerifyConfig::default(),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig = serde_json::from_str(text)?;
        config.validate()?;
        Ok(config)
    }

    /// Reads a config file and resolves its instance paths.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut config = Self::from_json(&std::fs::read_to_string(path)?)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in &mut config.instances {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be at least 1".into()));
        }
        if self.runs == 0 {
            return Err(Error::InvalidConfig("runs must be at least 1".into()));
        }
        if !self.checkpoint_ratio.is_finite() || self.checkpoint_ratio <= 1.0 {
            return Err(Error::InvalidConfig(format!("checkpoint ratio {} must exceed 1", self.checkpoint_ratio)));
        }
        if let Some(&c) = self.extra_checkpoints.iter().find(|&&c| c == 0 || c > self.horizon) {
            return Err(Error::InvalidConfig(format!("checkpoint {c} is outside 1..={}", self.horizon)));
        }
        if self.eval_cutoff == Some(0) {
            return Err(Error::InvalidConfig("eval_cutoff must be at least 1".into()));
        }
        if self.doubling_initial_horizon == 0 {
            return Err(Error::InvalidConfig("doubling_initial_horizon must be at least 1".into()));
        }
        if let DeltaPolicy::Fixed(d) = self.delta {
            DeltaPolicy::Fixed(d).resolve(self.horizon)?;
        }
        Ok(())
    }

    /// Every step at which metrics are recorded.
    pub fn checkpoints(&self) -> Vec<u64> {
        checkpoint_schedule(self.horizon, self.checkpoint_ratio, &self.extra_checkpoints)
    }

    pub fn learner_settings(&self) -> LearnerSettings {
        LearnerSettings {
            scope: self.update_scope,
            delta: self.delta,
            doubling_initial_horizon: self.doubling_initial_horizon,
        }
    }

    pub fn load_instances(&self) -> Result<Vec<Instance>> {
        let instances = self.instances.iter().map(Instance::load).collect::<Result<Vec<_>>>()?;
        let mut ids = BTreeSet::new();
        for inst in &instances {
            if !ids.insert(inst.id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate instance id {:?}", inst.id)));
            }
            self.cutoff_for(inst)?;
        }
        Ok(instances)
    }

    /// The metric cutoff for `instance`, after the override.
    pub fn cutoff_for(&self, instance: &Instance) -> Result<usize> {
        let cutoff = self.eval_cutoff.unwrap_or(instance.eval_cutoff);
        if cutoff == 0 || cutoff > instance.k() {
            return Err(Error::InvalidConfig(format!(
                "cutoff {cutoff} is outside 1..={} for instance {:?}",
                instance.k(),
                instance.id
            )));
        }
        Ok(cutoff)
    }
}

/// Step 1, every `ceil(ratio^m)` up to `horizon`, `horizon` itself and the
/// extra steps, sorted and without duplicates.
pub fn checkpoint_schedule(horizon: u64, ratio: f64, extra: &[u64]) -> Vec<u64> {
    let mut steps = BTreeSet::new();
    steps.insert(1);
    steps.insert(horizon);
    let mut value = 1.0f64;
    while value <= horizon as f64 {
        steps.insert(value.ceil() as u64);
        value *= ratio;
    }
    steps.extend(extra.iter().copied().filter(|&c| c >= 1 && c <= horizon));
    steps.into_iter().filter(|&c| c <= horizon).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_includes_endpoints_and_extras() {
        let s = checkpoint_schedule(1_000_000, 1.2, &[100, 100_000]);
        assert_eq!(s.first(), Some(&1));
        assert_eq!(s.last(), Some(&1_000_000));
        assert!(s.contains(&100) && s.contains(&100_000));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        assert!(s.len() < 90, "{}", s.len());
        assert_eq!(checkpoint_schedule(1, 1.2, &[]), vec![1]);
        assert_eq!(checkpoint_schedule(5, 2.0, &[]), vec![1, 2, 4, 5]);
    }

    #[test]
    fn parses_minimal_config_with_defaults() {
        let c = ExperimentConfig::from_json(r#"{"horizon": 100, "runs": 2, "seed": 7}"#).unwrap();
        assert_eq!(c.checkpoint_ratio, 1.2);
        assert_eq!(c.delta, DeltaPolicy::Auto);
        assert_eq!(c.update_scope, UpdateScope::RandomizedOnly);
        assert_eq!(c.sweep.chi_levels, vec![1, 2, 3, 4, 5]);
    }

    #[test]
    fn parses_full_config() {
        let c = ExperimentConfig::from_json(
            r#"{"instances": ["a.json"], "agents": ["bubblerank", "static"], "horizon": 1000,
                "runs": 3, "seed": 1, "delta": 0.01, "eval_cutoff": 5, "checkpoint_ratio": 1.5,
                "extra_checkpoints": [100], "update_scope": "all_adjacent", "output_dir": "out",
                "record_stats": true, "sweep": {"initial_lists": 4}}"#,
        )
        .unwrap();
        assert_eq!(c.agents, vec![AgentKind::BubbleRank, AgentKind::Static]);
        assert_eq!(c.delta, DeltaPolicy::Fixed(0.01));
        assert_eq!(c.update_scope, UpdateScope::AllAdjacent);
        assert_eq!(c.sweep.initial_lists, 4);
        assert!(c.sweep.include_optimal);
        let back = ExperimentConfig::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn rejects_invalid_configs() {
        for bad in [
            r#"{"horizon": 0, "runs": 1, "seed": 0}"#,
            r#"{"horizon": 10, "runs": 0, "seed": 0}"#,
            r#"{"horizon": 10, "runs": 1, "seed": 0, "checkpoint_ratio": 1.0}"#,
            r#"{"horizon": 10, "runs": 1, "seed": 0, "extra_checkpoints": [11]}"#,
            r#"{"horizon": 10, "runs": 1, "seed": 0, "delta": 1.5}"#,
            r#"{"horizon": 10, "runs": 1, "seed": 0, "agents": ["toprank"]}"#,
            r#"{"horizon": 10, "runs": 1, "seed": 0, "unknown": 1}"#,
        ] {
            assert!(ExperimentConfig::from_json(bad).is_err(), "{bad}");
        }
    }
}
