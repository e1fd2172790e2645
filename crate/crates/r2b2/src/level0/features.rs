//! Random Fourier features for stationary kernels.
//!
//! For the squared-exponential kernel the spectral density is Gaussian
//! with per-axis standard deviation `1 / length_scale`; a map with `d'`
//! features represents an input `x` as
//! `phi_i(x) = sqrt(2 sv / d') cos(w_i . x + b_i)` so that
//! `phi(x) . phi(x')` approximates `k(x, x')` in expectation.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::kernel::{KernelFamily, KernelSpec};

use super::StrategyError;

/// Number of random features used when a configuration does not override it.
pub const DEFAULT_NUM_FEATURES: usize = 5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomFeatureMap {
    /// Spectral frequencies, one vector of the input dimension per feature.
    frequencies: Vec<Vec<f64>>,
    /// Phases, uniform on `[0, 2 pi)`.
    phases: Vec<f64>,
    amplitude: f64,
}

impl RandomFeatureMap {
    pub fn num_features(&self) -> usize {
        self.phases.len()
    }

    /// Feature vector of `x`. Each coordinate is bounded by
    /// `sqrt(2 sv / d')`, so the vector norm is at most `sqrt(2 sv)`.
    pub fn features(&self, x: &[f64]) -> Vec<f64> {
        self.frequencies
            .iter()
            .zip(&self.phases)
            .map(|(w, &b)| {
                let dot: f64 = w.iter().zip(x).map(|(wi, xi)| wi * xi).sum();
                self.amplitude * (dot + b).cos()
            })
            .collect()
    }
}

/// Draws a feature map from the kernel's spectral density; deterministic
/// given `seed`. Only the squared-exponential family is supported.
pub fn build_feature_map(
    spec: &KernelSpec,
    dim: usize,
    num_features: usize,
    seed: u64,
) -> Result<RandomFeatureMap, StrategyError> {
    if num_features == 0 {
        return Err(StrategyError::NoFeatures);
    }
    let KernelFamily::SquaredExponential = spec.family else {
        return Err(StrategyError::UnsupportedSpectralFamily);
    };
    let mut stream = ChaCha12Rng::seed_from_u64(seed);
    let freq_std = 1.0 / spec.length_scale;
    let frequencies: Vec<Vec<f64>> = (0..num_features)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    let draw: f64 = StandardNormal.sample(&mut stream);
                    freq_std * draw
                })
                .collect()
        })
        .collect();
    let phases: Vec<f64> = (0..num_features)
        .map(|_| stream.random::<f64>() * std::f64::consts::TAU)
        .collect();
    Ok(RandomFeatureMap {
        frequencies,
        phases,
        amplitude: (2.0 * spec.signal_variance / num_features as f64).sqrt(),
    })
}
