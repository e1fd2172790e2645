//! Exact Gaussian-process posterior inference and prior sampling.
//!
//! The posterior over a payoff function conditioned on `T` noisy
//! observations at joint actions `z_1..z_T` is Gaussian with
//!
//! ```text
//! mu_T(z)      = k_T(z)' (K_T + s^2 I)^{-1} y_T
//! sigma_T^2(z) = k(z, z) - k_T(z)' (K_T + s^2 I)^{-1} k_T(z)
//! ```
//!
//! under a zero prior mean. The Gram factor is kept as a packed
//! lower-triangular Cholesky factor extended by one row per observation;
//! a full refactorization runs every [`REFACTOR_INTERVAL`] updates to
//! bound accumulated drift.

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::kernel::{KernelError, KernelSpec};

/// Largest point set whose Gram matrix this module will factorize for
/// prior sampling. A 100x100 joint grid (10^4 points, ~800 MB dense Gram)
/// is the intended ceiling.
pub const MAX_GRAM_POINTS: usize = 10_000;

/// Conditioning steps between full refactorizations of the Gram factor.
pub const REFACTOR_INTERVAL: usize = 64;

const BASE_JITTER: f64 = 1e-8;
const MAX_JITTER: f64 = 1e-4;

#[derive(Debug, Error)]
pub enum GpError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("point set of size {size} exceeds the Gram factorization cap {cap}")]
    GridTooLarge { size: usize, cap: usize },
    #[error("Gram factorization failed; largest jitter tried was {jitter_tried:e}")]
    Numerical { jitter_tried: f64 },
    #[error("noise_variance must be finite and nonnegative, got {0}")]
    BadNoiseVariance(f64),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

/// Packed lower-triangular matrix, row-major: row `i` holds `i + 1` entries.
#[derive(Debug, Clone, Default)]
struct PackedChol {
    data: Vec<f64>,
    n: usize,
}

impl PackedChol {
    fn row(&self, i: usize) -> &[f64] {
        let off = i * (i + 1) / 2;
        &self.data[off..off + i + 1]
    }

    /// Solves `L x = b` in place.
    fn forward_solve(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let mut s = b[i];
            for (lij, xj) in row[..i].iter().zip(b.iter()) {
                s -= lij * xj;
            }
            b[i] = s / row[i];
        }
    }

    /// Solves `L' x = b` in place.
    fn backward_solve(&self, b: &mut [f64]) {
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for j in i + 1..self.n {
                s -= self.row(j)[i] * b[j];
            }
            b[i] = s / self.row(i)[i];
        }
    }

    /// Appends one row given the cross-covariance vector and the diagonal
    /// entry; fails when the Schur complement is not positive.
    fn append(&mut self, mut cross: Vec<f64>, diag: f64) -> Result<(), ()> {
        debug_assert_eq!(cross.len(), self.n);
        self.forward_solve(&mut cross);
        let d2 = diag - cross.iter().map(|v| v * v).sum::<f64>();
        if !(d2 > 0.0) || !d2.is_finite() {
            return Err(());
        }
        self.data.extend_from_slice(&cross);
        self.data.push(d2.sqrt());
        self.n += 1;
        Ok(())
    }

    /// Cholesky of a dense symmetric matrix given in packed lower form.
    fn factorize(packed: &[f64], n: usize) -> Result<Self, ()> {
        let mut l = vec![0.0; packed.len()];
        for i in 0..n {
            let ioff = i * (i + 1) / 2;
            for j in 0..=i {
                let joff = j * (j + 1) / 2;
                let mut s = packed[ioff + j];
                for k in 0..j {
                    s -= l[ioff + k] * l[joff + k];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(());
                    }
                    l[ioff + j] = s.sqrt();
                } else {
                    l[ioff + j] = s / l[joff + j];
                }
            }
        }
        Ok(Self { data: l, n })
    }
}

/// Scratch buffers for repeated posterior queries; reusing one across a
/// slice of queries avoids per-query allocation without changing any
/// arithmetic relative to [`GpPosterior::predict`].
#[derive(Debug, Default, Clone)]
pub struct PredictScratch {
    cross: Vec<f64>,
}

/// Exact GP posterior. Values are immutable after construction;
/// [`GpPosterior::condition`] returns a new posterior, so posteriors can
/// be shared read-only across parallel workers.
#[derive(Debug, Clone)]
pub struct GpPosterior {
    kernel: KernelSpec,
    noise_variance: f64,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<f64>,
    factor: PackedChol,
    /// `(K + s^2 I)^{-1} y`, kept in sync with the factor.
    alpha: Vec<f64>,
    applied_jitter: f64,
    conditions_since_refactor: usize,
}

impl GpPosterior {
    /// Empty posterior: prior mean 0, prior variance `k(z, z)`.
    pub fn new(kernel: KernelSpec, noise_variance: f64) -> Result<Self, GpError> {
        if !noise_variance.is_finite() || noise_variance < 0.0 {
            return Err(GpError::BadNoiseVariance(noise_variance));
        }
        Ok(Self {
            kernel,
            noise_variance,
            inputs: Vec::new(),
            outputs: Vec::new(),
            factor: PackedChol::default(),
            alpha: Vec::new(),
            applied_jitter: 0.0,
            conditions_since_refactor: 0,
        })
    }

    /// Posterior conditioned on a whole observation batch at once.
    pub fn with_observations(
        kernel: KernelSpec,
        noise_variance: f64,
        inputs: Vec<Vec<f64>>,
        outputs: Vec<f64>,
    ) -> Result<Self, GpError> {
        if inputs.len() != outputs.len() {
            return Err(GpError::Internal(format!(
                "history length mismatch: {} inputs vs {} outputs",
                inputs.len(),
                outputs.len()
            )));
        }
        let mut gp = Self::new(kernel, noise_variance)?;
        gp.inputs = inputs;
        gp.outputs = outputs;
        gp.refactorize()?;
        Ok(gp)
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn noise_variance(&self) -> f64 {
        self.noise_variance
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[f64] {
        &self.outputs
    }

    /// Posterior mean and variance at `z`. Variance is clamped at zero when
    /// roundoff produces a slightly negative value.
    pub fn predict(&self, z: &[f64]) -> Result<(f64, f64), GpError> {
        let mut scratch = PredictScratch::default();
        self.predict_with(z, &mut scratch)
    }

    /// Same arithmetic as [`predict`](Self::predict) with caller-owned scratch.
    pub fn predict_with(&self, z: &[f64], scratch: &mut PredictScratch) -> Result<(f64, f64), GpError> {
        self.check_consistency()?;
        let kzz = self.kernel.eval(z, z)?;
        if self.inputs.is_empty() {
            return Ok((0.0, kzz));
        }
        if z.len() != self.inputs[0].len() {
            return Err(GpError::Kernel(KernelError::DimensionMismatch(
                z.len(),
                self.inputs[0].len(),
            )));
        }
        let cross = &mut scratch.cross;
        cross.clear();
        for x in &self.inputs {
            cross.push(self.kernel.eval_unchecked(z, x));
        }
        let mut mean = 0.0;
        for (k, a) in cross.iter().zip(&self.alpha) {
            mean += k * a;
        }
        self.factor.forward_solve(cross);
        let explained: f64 = cross.iter().map(|v| v * v).sum();
        let variance = (kzz - explained).max(0.0);
        Ok((mean, variance))
    }

    /// Returns a new posterior additionally conditioned on `(z, y)` via a
    /// one-row factor extension, with periodic full refactorization.
    pub fn condition(&self, z: &[f64], y: f64) -> Result<GpPosterior, GpError> {
        if let Some(first) = self.inputs.first() {
            if z.len() != first.len() {
                return Err(GpError::Kernel(KernelError::DimensionMismatch(z.len(), first.len())));
            }
        }
        let mut next = self.clone();
        let cross: Vec<f64> = next
            .inputs
            .iter()
            .map(|x| next.kernel.eval_unchecked(z, x))
            .collect();
        let diag = next.kernel.eval(z, z)? + next.noise_variance + next.applied_jitter;
        next.inputs.push(z.to_vec());
        next.outputs.push(y);
        next.conditions_since_refactor += 1;
        let appended = next.conditions_since_refactor < REFACTOR_INTERVAL
            && next.factor.append(cross, diag).is_ok();
        if !appended {
            next.refactorize()?;
        } else {
            next.recompute_alpha();
        }
        Ok(next)
    }

    /// Rebuilds the factor from scratch, escalating diagonal jitter by
    /// factors of ten on breakdown.
    fn refactorize(&mut self) -> Result<(), GpError> {
        let n = self.inputs.len();
        self.conditions_since_refactor = 0;
        if n == 0 {
            self.factor = PackedChol::default();
            self.alpha.clear();
            self.applied_jitter = 0.0;
            return Ok(());
        }
        let mut packed = vec![0.0; n * (n + 1) / 2];
        for i in 0..n {
            let off = i * (i + 1) / 2;
            for j in 0..=i {
                packed[off + j] = self.kernel.eval_unchecked(&self.inputs[i], &self.inputs[j]);
            }
            packed[off + i] += self.noise_variance;
        }
        // Plain attempt first; keep any previously applied jitter so the
        // factor stays consistent with future diagonal extensions.
        let mut jitter = self.applied_jitter;
        loop {
            let mut attempt = packed.clone();
            if jitter > 0.0 {
                for i in 0..n {
                    attempt[i * (i + 1) / 2 + i] += jitter;
                }
            }
            match PackedChol::factorize(&attempt, n) {
                Ok(f) => {
                    self.factor = f;
                    self.applied_jitter = jitter;
                    self.recompute_alpha();
                    return Ok(());
                }
                Err(()) => {
                    let cap = MAX_JITTER * self.kernel.signal_variance;
                    if jitter >= cap {
                        return Err(GpError::Numerical { jitter_tried: jitter });
                    }
                    jitter = if jitter == 0.0 {
                        BASE_JITTER * self.kernel.signal_variance
                    } else {
                        (jitter * 10.0).min(cap)
                    };
                }
            }
        }
    }

    fn recompute_alpha(&mut self) {
        self.alpha = self.outputs.clone();
        self.factor.forward_solve(&mut self.alpha);
        self.factor.backward_solve(&mut self.alpha);
    }

    fn check_consistency(&self) -> Result<(), GpError> {
        if self.factor.n != self.inputs.len() || self.alpha.len() != self.inputs.len() {
            return Err(GpError::Internal(format!(
                "stale factorization: {} rows for {} observations",
                self.factor.n,
                self.inputs.len()
            )));
        }
        Ok(())
    }
}

/// One draw from the zero-mean GP prior evaluated at every point of
/// `points`, computed as `L eps` with `L` the jittered Gram factor and
/// `eps` i.i.d. standard normals. Deterministic in `seed`.
pub fn sample_prior(kernel: &KernelSpec, points: &[Vec<f64>], seed: u64) -> Result<Vec<f64>, GpError> {
    let n = points.len();
    if n > MAX_GRAM_POINTS {
        return Err(GpError::GridTooLarge {
            size: n,
            cap: MAX_GRAM_POINTS,
        });
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let mut gram = nalgebra::DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let v = kernel.eval(&points[i], &points[j])?;
            gram[(i, j)] = v;
            gram[(j, i)] = v;
        }
    }
    let mut jitter = BASE_JITTER * kernel.signal_variance;
    let factor = loop {
        let mut m = gram.clone();
        for i in 0..n {
            m[(i, i)] += jitter;
        }
        match nalgebra::Cholesky::new(m) {
            Some(c) => break c,
            None => {
                let cap = MAX_JITTER * kernel.signal_variance;
                if jitter >= cap {
                    return Err(GpError::Numerical { jitter_tried: jitter });
                }
                jitter = (jitter * 10.0).min(cap);
            }
        }
    };
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let eps = nalgebra::DVector::<f64>::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
    let sample = factor.l() * eps;
    Ok(sample.iter().copied().collect())
}
