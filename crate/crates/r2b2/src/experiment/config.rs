//! Declarative experiment configuration.
//!
//! A config file is TOML with nested sections (see the crate README for
//! the full schema). Together with `master_seed` it determines every byte
//! of output: games, initializations, agent streams, and aggregation are
//! all derived from it deterministically.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::game::{AgentSpec, ExpectationChoice, GameType};
use crate::gp::MAX_GRAM_POINTS;
use crate::kernel::KernelSpec;
use crate::level0::Level0Config;
use crate::space::ActionSpace;

use super::ExperimentError;

pub const SCHEMA_VERSION: u32 = 1;

fn default_init_size() -> usize {
    1
}

fn default_noise_variance() -> f64 {
    0.01
}

fn default_grid_dim() -> usize {
    1
}

fn default_beta_scale() -> f64 {
    1.0
}

/// Which per-iteration metric the experiment aggregates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MetricKind {
    /// Average gap to the global payoff maximum over the prefix.
    #[default]
    MeanRegret,
    /// Cumulative external regret at each prefix (hindsight argmax
    /// recomputed per prefix).
    ExternalRegret,
}

impl MetricKind {
    pub fn as_str(self) -> &'static str {
        match self {
            MetricKind::MeanRegret => "mean-regret",
            MetricKind::ExternalRegret => "external-regret",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameConfig {
    #[serde(rename = "type")]
    pub game_type: GameType,
    pub kernel: KernelSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentConfig {
    /// Input dimension of this agent's action space.
    #[serde(default = "default_grid_dim")]
    pub grid_dim: usize,
    /// Equally spaced points per axis; the space has
    /// `grid_points_per_axis ^ grid_dim` actions.
    pub grid_points_per_axis: usize,
    pub level: u32,
    #[serde(default)]
    pub lite: bool,
    pub level0: Level0Config,
    #[serde(default)]
    pub believed_opponent_level0: Option<Vec<Level0Config>>,
    #[serde(default = "default_noise_variance")]
    pub noise_variance: f64,
    #[serde(default)]
    pub mc_samples: Option<usize>,
    #[serde(default)]
    pub expectation: ExpectationChoice,
}

impl AgentConfig {
    pub fn to_spec(&self) -> AgentSpec {
        AgentSpec {
            level: self.level,
            lite: self.lite,
            level0: self.level0.clone(),
            believed_opponent_level0: self.believed_opponent_level0.clone(),
            noise_variance: self.noise_variance,
            mc_samples: self.mc_samples,
            expectation: self.expectation,
        }
    }

    pub fn space(&self) -> Result<ActionSpace, ExperimentError> {
        ActionSpace::grid(self.grid_dim, self.grid_points_per_axis).map_err(|e| {
            ExperimentError::Validation {
                field: "agents.grid".into(),
                constraint: e.to_string(),
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub master_seed: u64,
    /// Iterations per repeated game.
    pub horizon: usize,
    pub delta: f64,
    #[serde(default)]
    pub tight_beta: bool,
    /// Multiplier on the confidence schedule used inside game runs; the
    /// theoretical schedule (scale 1) is conservative in practice.
    #[serde(default = "default_beta_scale")]
    pub beta_scale: f64,
    /// Number of independent payoff-function draws.
    pub num_function_samples: usize,
    /// Initializations per draw.
    pub num_inits: usize,
    /// Random seeded joint actions (with observed payoffs) per
    /// initialization.
    #[serde(default = "default_init_size")]
    pub init_size: usize,
    #[serde(default)]
    pub metric: MetricKind,
    /// Agent whose metric is aggregated.
    #[serde(default)]
    pub metric_agent: usize,
    pub output_dir: PathBuf,
    pub game: GameConfig,
    pub agents: Vec<AgentConfig>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ExperimentError> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text)
    }

    pub fn from_toml(text: &str) -> Result<Self, ExperimentError> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ExperimentError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    /// SHA-256 over the canonical serialization with the output path
    /// blanked, so the digest identifies the run's scientific content
    /// rather than its location on disk.
    pub fn digest(&self) -> String {
        let mut canonical = self.clone();
        canonical.output_dir = PathBuf::new();
        let bytes = canonical.to_toml();
        let mut hasher = Sha256::new();
        hasher.update(bytes.as_bytes());
        let out = hasher.finalize();
        out.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn replications(&self) -> usize {
        self.num_function_samples * self.num_inits
    }

    pub fn validate(&self) -> Result<(), ExperimentError> {
        let fail = |field: &str, constraint: String| {
            Err(ExperimentError::Validation {
                field: field.into(),
                constraint,
            })
        };
        if self.schema_version != SCHEMA_VERSION {
            return fail(
                "schema_version",
                format!("supported version is {SCHEMA_VERSION}, got {}", self.schema_version),
            );
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return fail("delta", format!("must lie in (0, 1), got {}", self.delta));
        }
        if self.horizon == 0 {
            return fail("horizon", "must be >= 1".into());
        }
        if !(self.beta_scale > 0.0) || !self.beta_scale.is_finite() {
            return fail(
                "beta_scale",
                format!("must be positive and finite, got {}", self.beta_scale),
            );
        }
        if self.num_function_samples == 0 {
            return fail("num_function_samples", "must be >= 1".into());
        }
        if self.num_inits == 0 {
            return fail("num_inits", "must be >= 1".into());
        }
        if self.agents.len() < 2 {
            return fail("agents", format!("need at least 2 agents, got {}", self.agents.len()));
        }
        if self.metric_agent >= self.agents.len() {
            return fail(
                "metric_agent",
                format!("must index an agent (0..{})", self.agents.len()),
            );
        }
        KernelSpec::new(
            self.game.kernel.family,
            self.game.kernel.length_scale,
            self.game.kernel.signal_variance,
        )
        .map_err(|e| ExperimentError::Validation {
            field: "game.kernel".into(),
            constraint: e.to_string(),
        })?;
        let mut joint_points = 1usize;
        for (i, agent) in self.agents.iter().enumerate() {
            if agent.grid_dim == 0 {
                return fail(&format!("agents[{i}].grid_dim"), "must be >= 1".into());
            }
            if agent.grid_points_per_axis == 0 {
                return fail(&format!("agents[{i}].grid_points_per_axis"), "must be >= 1".into());
            }
            if !agent.noise_variance.is_finite() || agent.noise_variance < 0.0 {
                return fail(
                    &format!("agents[{i}].noise_variance"),
                    format!("must be finite and nonnegative, got {}", agent.noise_variance),
                );
            }
            if agent.lite && agent.level != 1 {
                return fail(
                    &format!("agents[{i}].lite"),
                    format!("applies to level 1 only, got level {}", agent.level),
                );
            }
            if agent.mc_samples == Some(0) {
                return fail(&format!("agents[{i}].mc_samples"), "must be >= 1 when set".into());
            }
            if let Some(beliefs) = &agent.believed_opponent_level0 {
                if beliefs.len() != self.agents.len() - 1 {
                    return fail(
                        &format!("agents[{i}].believed_opponent_level0"),
                        format!("needs {} entries, got {}", self.agents.len() - 1, beliefs.len()),
                    );
                }
            }
            joint_points = joint_points
                .saturating_mul(agent.grid_points_per_axis.pow(agent.grid_dim as u32));
        }
        if joint_points > MAX_GRAM_POINTS {
            return fail(
                "agents.grid",
                format!("joint grid has {joint_points} points, over the factorization cap {MAX_GRAM_POINTS}"),
            );
        }
        Ok(())
    }
}
