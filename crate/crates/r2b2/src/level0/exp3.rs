//! EXP3 for the adversarial linear bandit on random-feature inputs.
//!
//! The payoff surface over the agent's own actions is represented through
//! a random Fourier feature map of its kernel; losses are estimated with
//! the importance-weighted least-squares estimator
//! `theta = Sigma_t^{-1} phi(a_t) loss_t` with
//! `Sigma_t = sum_a p_t(a) phi(a) phi(a)'`, and exponential weights run on
//! the estimated per-action losses. Weights are stored in the log domain.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::kernel::KernelSpec;
use crate::space::ActionSpace;

use super::features::{build_feature_map, RandomFeatureMap, DEFAULT_NUM_FEATURES};
use super::{MixedStrategy, StrategyError};

fn default_num_features() -> usize {
    DEFAULT_NUM_FEATURES
}

fn default_clamp() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp3Params {
    /// Number of random features `d'`.
    #[serde(default = "default_num_features")]
    pub num_features: usize,
    /// Fixed learning rate; when absent, `sqrt(ln|X| / (d' T))` with a
    /// known horizon and `sqrt(ln|X| / (d' t))` otherwise.
    #[serde(default)]
    pub learning_rate: Option<f64>,
    /// Fixed exploration mixture; when absent,
    /// `min(1, sqrt(|X| ln|X| / t))`.
    #[serde(default)]
    pub exploration: Option<f64>,
    /// Clamp observed payoffs into `[0, 1]` instead of rejecting them.
    #[serde(default = "default_clamp")]
    pub clamp_payoffs: bool,
}

impl Default for Exp3Params {
    fn default() -> Self {
        Self {
            num_features: DEFAULT_NUM_FEATURES,
            learning_rate: None,
            exploration: None,
            clamp_payoffs: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Exp3State {
    params: Exp3Params,
    features: RandomFeatureMap,
    /// `phi(x_a)` per action, in space index order.
    action_features: Vec<Vec<f64>>,
    log_weights: Vec<f64>,
    horizon: Option<usize>,
    /// Completed update count.
    round: usize,
}

impl Exp3State {
    pub fn new(
        space: &ActionSpace,
        kernel: &KernelSpec,
        params: Exp3Params,
        horizon: Option<usize>,
        seed: u64,
    ) -> Result<Self, StrategyError> {
        if space.size() == 0 {
            return Err(StrategyError::EmptySpace);
        }
        let features = build_feature_map(kernel, space.dim(), params.num_features, seed)?;
        let action_features = space.points().map(|p| features.features(p)).collect();
        Ok(Self {
            params,
            features,
            action_features,
            log_weights: vec![0.0; space.size()],
            horizon,
            round: 0,
        })
    }

    pub fn feature_map(&self) -> &RandomFeatureMap {
        &self.features
    }

    pub fn round(&self) -> usize {
        self.round
    }

    fn num_actions(&self) -> usize {
        self.log_weights.len()
    }

    fn exploration_at(&self, t: usize) -> f64 {
        match self.params.exploration {
            Some(g) => g,
            None => {
                let k = self.num_actions() as f64;
                (k * k.ln() / t as f64).sqrt().min(1.0)
            }
        }
    }

    fn learning_rate_at(&self, t: usize) -> f64 {
        match self.params.learning_rate {
            Some(eta) => eta,
            None => {
                let k = self.num_actions() as f64;
                let d = self.params.num_features as f64;
                let denom = d * self.horizon.unwrap_or(t) as f64;
                (k.ln() / denom).sqrt()
            }
        }
    }

    /// The mixed strategy for the upcoming round: exponential weights
    /// mixed with the uniform exploration distribution.
    pub fn distribution(&self, space: &ActionSpace) -> Result<MixedStrategy, StrategyError> {
        let t = self.round + 1;
        let gamma = self.exploration_at(t);
        let max = self
            .log_weights
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut probs: Vec<f64> = self.log_weights.iter().map(|w| (w - max).exp()).collect();
        let sum: f64 = probs.iter().sum();
        let k = self.num_actions() as f64;
        for p in &mut probs {
            *p = (1.0 - gamma) * *p / sum + gamma / k;
        }
        let total: f64 = probs.iter().sum();
        for p in &mut probs {
            *p /= total;
        }
        MixedStrategy::new(space, probs)
    }

    /// Consumes one observed payoff for the action actually played and
    /// returns the next round's distribution.
    pub fn step(
        &mut self,
        space: &ActionSpace,
        observed_payoff: f64,
        played_index: usize,
    ) -> Result<MixedStrategy, StrategyError> {
        let payoff = if self.params.clamp_payoffs {
            observed_payoff.clamp(0.0, 1.0)
        } else if !(0.0..=1.0).contains(&observed_payoff) {
            return Err(StrategyError::PayoffOutOfRange(observed_payoff));
        } else {
            observed_payoff
        };
        let t = self.round + 1;
        let loss = 1.0 - payoff;
        let probs = self.distribution(space)?;
        let d = self.params.num_features;

        // Sigma_t = sum_a p(a) phi_a phi_a' (ridged for invertibility).
        let mut sigma = DMatrix::<f64>::zeros(d, d);
        for (phi, &p) in self.action_features.iter().zip(probs.probs()) {
            for i in 0..d {
                for j in 0..d {
                    sigma[(i, j)] += p * phi[i] * phi[j];
                }
            }
        }
        let ridge = 1e-9 * (sigma.trace() / d as f64 + 1.0);
        for i in 0..d {
            sigma[(i, i)] += ridge;
        }
        let phi_played = DVector::from_column_slice(&self.action_features[played_index]);
        let theta = sigma
            .lu()
            .solve(&(phi_played * loss))
            .ok_or(StrategyError::Gp(crate::gp::GpError::Numerical {
                jitter_tried: ridge,
            }))?;

        let eta = self.learning_rate_at(t);
        for (w, phi) in self.log_weights.iter_mut().zip(&self.action_features) {
            let est: f64 = phi.iter().zip(theta.iter()).map(|(a, b)| a * b).sum();
            *w -= eta * est;
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
        self.distribution(space)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;

    fn se01() -> KernelSpec {
        KernelSpec::squared_exponential(0.1).unwrap()
    }

    fn two_point_space() -> ActionSpace {
        ActionSpace::grid(1, 2).unwrap()
    }

    #[test]
    fn zero_learning_rate_is_identity() {
        let space = two_point_space();
        let params = Exp3Params {
            learning_rate: Some(0.0),
            exploration: Some(0.1),
            ..Exp3Params::default()
        };
        let mut state = Exp3State::new(&space, &se01(), params, Some(100), 1).unwrap();
        let before = state.distribution(&space).unwrap();
        state.step(&space, 0.9, 0).unwrap();
        let after = state.distribution(&space).unwrap();
        assert_eq!(before.probs(), after.probs());
    }

    #[test]
    fn distribution_stays_normalized_over_long_runs() {
        let space = ActionSpace::grid(1, 6).unwrap();
        let mut state =
            Exp3State::new(&space, &se01(), Exp3Params::default(), Some(1000), 3).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(4);
        for _ in 0..1000 {
            let dist = state.distribution(&space).unwrap();
            let played = dist.sample(&mut rng).unwrap();
            let next = state.step(&space, rng.random::<f64>(), played).unwrap();
            let sum: f64 = next.probs().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn payoff_outside_range_rejected_without_clamping() {
        let space = two_point_space();
        let params = Exp3Params {
            clamp_payoffs: false,
            ..Exp3Params::default()
        };
        let mut state = Exp3State::new(&space, &se01(), params, None, 1).unwrap();
        assert!(matches!(
            state.step(&space, 1.5, 0),
            Err(StrategyError::PayoffOutOfRange(_))
        ));
    }

    #[test]
    fn regret_on_gap_half_environment_beats_bound() {
        // Two actions whose stochastic payoffs have means 0.75 and 0.25.
        // Empirical regret after T = 2000 must stay under
        // 2 sqrt(d' T ln|X|) = 166.5, averaged over 20 seeds.
        let space = two_point_space();
        let horizon = 2000usize;
        let mut total_regret = 0.0;
        for seed in 0..20u64 {
            let mut state = Exp3State::new(
                &space,
                &se01(),
                Exp3Params::default(),
                Some(horizon),
                seed,
            )
            .unwrap();
            let mut env = ChaCha12Rng::seed_from_u64(1000 + seed);
            let mut rng = ChaCha12Rng::seed_from_u64(2000 + seed);
            let mut regret = 0.0;
            for _ in 0..horizon {
                let dist = state.distribution(&space).unwrap();
                let played = dist.sample(&mut rng).unwrap();
                let noise = env.random::<f64>() * 0.5;
                let (payoff, gap) = if played == 0 {
                    (0.5 + noise, 0.0)
                } else {
                    (noise, 0.5)
                };
                regret += gap;
                state.step(&space, payoff, played).unwrap();
            }
            total_regret += regret;
        }
        let mean_regret = total_regret / 20.0;
        let bound = 2.0 * (5.0 * 2000.0 * 2.0f64.ln()).sqrt();
        assert!(
            mean_regret < bound,
            "mean regret {mean_regret} vs bound {bound}"
        );
    }
}
