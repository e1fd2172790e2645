//! Confidence schedule and GP-UCB acquisition.
//!
//! The acquisition value at a joint action is `mu(z) + sqrt(beta_t) *
//! sigma(z)`; with the schedule below it upper-bounds the payoff at every
//! domain point simultaneously with probability at least `1 - delta`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gp::{GpError, GpPosterior, PredictScratch};
use crate::space::{assemble_joint, ActionSpace};

#[derive(Debug, Error)]
pub enum AcquisitionError {
    #[error(transparent)]
    Gp(#[from] GpError),
    #[error("iteration index must be >= 1, got {0}")]
    BadIteration(usize),
    #[error("delta must lie in (0, 1), got {0}")]
    BadDelta(f64),
    #[error("domain size must be positive")]
    EmptyDomain,
}

/// The confidence-width schedule `beta_t = 2 ln(|X| t^2 pi^2 / (3 delta))`.
///
/// `tight` switches to the `6 delta` denominator, which is a valid tighter
/// bound; the `3 delta` form is the default.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaSchedule {
    pub domain_size: usize,
    pub delta: f64,
    #[serde(default)]
    pub tight: bool,
}

impl BetaSchedule {
    pub fn new(domain_size: usize, delta: f64) -> Result<Self, AcquisitionError> {
        Self::with_tightness(domain_size, delta, false)
    }

    pub fn with_tightness(domain_size: usize, delta: f64, tight: bool) -> Result<Self, AcquisitionError> {
        if domain_size == 0 {
            return Err(AcquisitionError::EmptyDomain);
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(AcquisitionError::BadDelta(delta));
        }
        Ok(Self {
            domain_size,
            delta,
            tight,
        })
    }

    /// `beta_t` for iteration `t >= 1`.
    pub fn beta(&self, t: usize) -> Result<f64, AcquisitionError> {
        if t < 1 {
            return Err(AcquisitionError::BadIteration(t));
        }
        let denom = if self.tight { 6.0 } else { 3.0 };
        let t = t as f64;
        Ok(2.0
            * (self.domain_size as f64 * t * t * std::f64::consts::PI * std::f64::consts::PI
                / (denom * self.delta))
                .ln())
    }
}

/// The regret-bound constant `C1 = 8 / ln(1 + 1/noise_variance)`, logged
/// as a run diagnostic. Zero noise gives 0 (the bound degenerates).
pub fn regret_constant_c1(noise_variance: f64) -> f64 {
    if noise_variance <= 0.0 {
        return 0.0;
    }
    8.0 / (1.0 + noise_variance.recip()).ln()
}

/// GP-UCB value `mu(z) + sqrt(beta_t) * sigma(z)`.
pub fn ucb(gp: &GpPosterior, z: &[f64], beta_t: f64) -> Result<f64, AcquisitionError> {
    let mut scratch = PredictScratch::default();
    ucb_with(gp, z, beta_t, &mut scratch)
}

#[inline]
pub(crate) fn ucb_with(
    gp: &GpPosterior,
    z: &[f64],
    beta_t: f64,
    scratch: &mut PredictScratch,
) -> Result<f64, AcquisitionError> {
    let (mean, variance) = gp.predict_with(z, scratch)?;
    Ok(mean + beta_t.sqrt() * variance.sqrt())
}

/// GP-UCB over one agent's whole action space with every other agent's
/// coordinate block held fixed. Element `i` equals [`ucb`] at
/// `(own_space.point(i), others)`; ordering follows the space's index
/// order. All elements share the posterior factorization; the arithmetic
/// per element is identical to the scalar path.
///
/// `own_position` is the agent's slot in the joint concatenation order and
/// `others` holds the remaining agents' blocks in agent order.
pub fn ucb_slice(
    gp: &GpPosterior,
    own_space: &ActionSpace,
    own_position: usize,
    others: &[&[f64]],
    beta_t: f64,
) -> Result<Vec<f64>, AcquisitionError> {
    let mut out = Vec::with_capacity(own_space.size());
    let mut scratch = PredictScratch::default();
    let mut joint = Vec::new();
    for own in own_space.points() {
        assemble_joint(own_position, own, others, &mut joint);
        out.push(ucb_with(gp, &joint, beta_t, &mut scratch)?);
    }
    Ok(out)
}
