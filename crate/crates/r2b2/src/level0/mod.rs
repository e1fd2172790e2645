//! Level-0 mixed strategies.
//!
//! A level-0 agent plays a probability distribution over its own action
//! space without modeling its opponents. Three built-ins are provided —
//! uniform random search, EXP3 over random Fourier features, and GP-MW —
//! but anything producing a [`MixedStrategy`] per round qualifies.

mod exp3;
mod features;
mod gpmw;

pub use exp3::{Exp3Params, Exp3State};
pub use features::{build_feature_map, RandomFeatureMap};
pub use gpmw::{EtaSchedule, GpMwParams, GpMwState};

use rand::Rng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::space::ActionSpace;

/// Tolerance on the total probability mass of a mixed strategy.
pub const NORMALIZATION_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("probability vector has {got} entries for a space of size {expected}")]
    LengthMismatch { got: usize, expected: usize },
    #[error("probability {value} at index {index} is negative or not finite")]
    BadProbability { index: usize, value: f64 },
    #[error("probabilities sum to {0}, not 1")]
    NotNormalized(f64),
    #[error("strategy has empty support")]
    EmptySupport,
    #[error("action space is empty")]
    EmptySpace,
    #[error("payoff {0} outside [0, 1]; rescale or enable clamping")]
    PayoffOutOfRange(f64),
    #[error("kernel family has no supported spectral density for feature sampling")]
    UnsupportedSpectralFamily,
    #[error("feature count must be >= 1")]
    NoFeatures,
    #[error(transparent)]
    Gp(#[from] crate::gp::GpError),
    #[error(transparent)]
    Acquisition(#[from] crate::acquisition::AcquisitionError),
}

/// A probability distribution over one agent's action space, indexed in
/// the space's point order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixedStrategy {
    probs: Vec<f64>,
}

impl MixedStrategy {
    /// Validates nonnegativity and normalization to [`NORMALIZATION_TOL`].
    pub fn new(space: &ActionSpace, probs: Vec<f64>) -> Result<Self, StrategyError> {
        if probs.len() != space.size() {
            return Err(StrategyError::LengthMismatch {
                got: probs.len(),
                expected: space.size(),
            });
        }
        let mut sum = 0.0;
        for (index, &value) in probs.iter().enumerate() {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(StrategyError::BadProbability { index, value });
            }
            sum += value;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(StrategyError::NotNormalized(sum));
        }
        Ok(Self { probs })
    }

    /// Uniform distribution: every action gets mass `1 / |X|`.
    pub fn uniform(space: &ActionSpace) -> Result<Self, StrategyError> {
        if space.size() == 0 {
            return Err(StrategyError::EmptySpace);
        }
        let p = 1.0 / space.size() as f64;
        Ok(Self {
            probs: vec![p; space.size()],
        })
    }

    /// All mass on one action.
    pub fn point_mass(space: &ActionSpace, index: usize) -> Result<Self, StrategyError> {
        if index >= space.size() {
            return Err(StrategyError::LengthMismatch {
                got: index,
                expected: space.size(),
            });
        }
        let mut probs = vec![0.0; space.size()];
        probs[index] = 1.0;
        Ok(Self { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Indices with strictly positive mass, ascending.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }

    /// Draws an action index by inverse-CDF walk over a single uniform
    /// variate; deterministic given the stream state.
    pub fn sample(&self, rng: &mut ChaCha12Rng) -> Result<usize, StrategyError> {
        let total: f64 = self.probs.iter().sum();
        if !(total > 0.0) {
            return Err(StrategyError::EmptySupport);
        }
        let u = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut last_positive = None;
        for (i, &p) in self.probs.iter().enumerate() {
            if p > 0.0 {
                acc += p;
                last_positive = Some(i);
                if u < acc {
                    return Ok(i);
                }
            }
        }
        // u landed on the terminal boundary; return the last support point.
        last_positive.ok_or(StrategyError::EmptySupport)
    }

    /// Trace of the covariance matrix of the action coordinates under this
    /// distribution: `sum_d Var[coordinate d]`.
    pub fn covariance_trace(&self, space: &ActionSpace) -> f64 {
        let dim = space.dim();
        let mut mean = vec![0.0; dim];
        let mut second = vec![0.0; dim];
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            for (d, &c) in space.point(i).iter().enumerate() {
                mean[d] += p * c;
                second[d] += p * c * c;
            }
        }
        (0..dim).map(|d| (second[d] - mean[d] * mean[d]).max(0.0)).sum()
    }
}

/// Level-0 strategy selection and parameters for one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Level0Config {
    /// Uniform sampling over the agent's own space.
    RandomSearch,
    /// EXP3 for the adversarial linear bandit on a random-feature
    /// representation of the payoff.
    Exp3(Exp3Params),
    /// Multiplicative weights driven by negated GP-UCB slices.
    GpMw(GpMwParams),
}
