//! GP-MW: multiplicative weights over the agent's own domain with losses
//! taken from negated GP-UCB values.
//!
//! After each round the agent evaluates its GP-UCB acquisition at every
//! point of its own space with the other agents' realized actions held
//! fixed, converts the values to losses `1 - clamp(ucb, 0, 1)` (payoffs
//! are scaled to `[0, 1]`; UCB can exceed that range), and applies
//! `w_i <- w_i * exp(-eta * loss_i)`. Weights live in the log domain so
//! long horizons cannot underflow.

use serde::{Deserialize, Serialize};

use crate::acquisition::ucb_slice;
use crate::gp::GpPosterior;
use crate::space::ActionSpace;

use super::{MixedStrategy, StrategyError};

/// Learning-rate schedule when no fixed rate is configured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EtaSchedule {
    /// `sqrt(8 ln|X| / T)`, requires a known horizon.
    #[default]
    Horizon,
    /// `sqrt(8 ln|X| / t)`.
    Anytime,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GpMwParams {
    /// Fixed learning rate; overrides the schedule when present.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    #[serde(default)]
    pub schedule: EtaSchedule,
}

#[derive(Debug, Clone)]
pub struct GpMwState {
    params: GpMwParams,
    log_weights: Vec<f64>,
    horizon: Option<usize>,
    round: usize,
}

impl GpMwState {
    pub fn new(space_size: usize, params: GpMwParams, horizon: Option<usize>) -> Result<Self, StrategyError> {
        if space_size == 0 {
            return Err(StrategyError::EmptySpace);
        }
        Ok(Self {
            params,
            log_weights: vec![0.0; space_size],
            horizon,
            round: 0,
        })
    }

    pub fn round(&self) -> usize {
        self.round
    }

    fn eta_at(&self, t: usize) -> f64 {
        if let Some(eta) = self.params.learning_rate {
            return eta;
        }
        let k = self.log_weights.len() as f64;
        let denom = match self.params.schedule {
            EtaSchedule::Horizon => self.horizon.unwrap_or(t),
            EtaSchedule::Anytime => t,
        } as f64;
        (8.0 * k.ln() / denom).sqrt()
    }

    /// Current mixed strategy: normalized exponential of the log weights.
    pub fn distribution(&self, space: &ActionSpace) -> Result<MixedStrategy, StrategyError> {
        let max = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = self.log_weights.iter().map(|w| (w - max).exp()).collect();
        let sum: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= sum;
        }
        MixedStrategy::new(space, probs)
    }

    /// Multiplicative update from an explicit loss vector.
    pub fn apply_losses(&mut self, losses: &[f64], eta: f64) {
        debug_assert_eq!(losses.len(), self.log_weights.len());
        for (w, &l) in self.log_weights.iter_mut().zip(losses) {
            *w -= eta * l;
        }
        let max = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        for w in &mut self.log_weights {
            *w -= max;
        }
        self.round += 1;
    }

    /// One GP-MW round: UCB slice over the agent's own space at the other
    /// agents' realized actions, negated-and-clamped into losses, then the
    /// multiplicative update. Returns the next round's distribution.
    pub fn update(
        &mut self,
        gp: &GpPosterior,
        own_space: &ActionSpace,
        own_position: usize,
        others_actions: &[&[f64]],
        beta_t: f64,
    ) -> Result<MixedStrategy, StrategyError> {
        let slice = ucb_slice(gp, own_space, own_position, others_actions, beta_t)?;
        let losses: Vec<f64> = slice.iter().map(|u| 1.0 - u.clamp(0.0, 1.0)).collect();
        let eta = self.eta_at(self.round + 1);
        self.apply_losses(&losses, eta);
        self.distribution(own_space)
    }
}
