//! Stationary covariance kernels over joint action vectors.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum KernelError {
    #[error("kernel inputs have mismatched dimensions: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("length_scale must be positive, got {0}")]
    BadLengthScale(f64),
    #[error("signal_variance must be positive, got {0}")]
    BadSignalVariance(f64),
}

/// Matérn smoothness parameters with closed-form kernels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaternNu {
    #[serde(rename = "1.5")]
    ThreeHalves,
    #[serde(rename = "2.5")]
    FiveHalves,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelFamily {
    SquaredExponential,
    Matern { nu: MaternNu },
}

/// A stationary kernel `k(z, z') = sv * g(||z - z'|| / l)` with
/// `k(z, z) = sv` and `k(z, z') <= sv` everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub length_scale: f64,
    pub signal_variance: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, length_scale: f64, signal_variance: f64) -> Result<Self, KernelError> {
        if !(length_scale > 0.0) || !length_scale.is_finite() {
            return Err(KernelError::BadLengthScale(length_scale));
        }
        if !(signal_variance > 0.0) || !signal_variance.is_finite() {
            return Err(KernelError::BadSignalVariance(signal_variance));
        }
        Ok(Self {
            family,
            length_scale,
            signal_variance,
        })
    }

    /// Squared-exponential kernel with unit signal variance.
    pub fn squared_exponential(length_scale: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::SquaredExponential, length_scale, 1.0)
    }

    pub fn matern(nu: MaternNu, length_scale: f64) -> Result<Self, KernelError> {
        Self::new(KernelFamily::Matern { nu }, length_scale, 1.0)
    }

    /// `k(z, z2)`.
    pub fn eval(&self, z: &[f64], z2: &[f64]) -> Result<f64, KernelError> {
        if z.len() != z2.len() {
            return Err(KernelError::DimensionMismatch(z.len(), z2.len()));
        }
        Ok(self.eval_unchecked(z, z2))
    }

    /// `k(z, z2)` without the dimension check; used on hot paths where the
    /// caller guarantees matching dimensions.
    #[inline]
    pub(crate) fn eval_unchecked(&self, z: &[f64], z2: &[f64]) -> f64 {
        let mut r2 = 0.0;
        for (a, b) in z.iter().zip(z2) {
            let d = a - b;
            r2 += d * d;
        }
        self.eval_r2(r2)
    }

    #[inline]
    fn eval_r2(&self, r2: f64) -> f64 {
        let sv = self.signal_variance;
        let l = self.length_scale;
        match self.family {
            KernelFamily::SquaredExponential => sv * (-r2 / (2.0 * l * l)).exp(),
            KernelFamily::Matern { nu: MaternNu::ThreeHalves } => {
                let s = (3.0 * r2).sqrt() / l;
                sv * (1.0 + s) * (-s).exp()
            }
            KernelFamily::Matern { nu: MaternNu::FiveHalves } => {
                let s = (5.0 * r2).sqrt() / l;
                sv * (1.0 + s + s * s / 3.0) * (-s).exp()
            }
        }
    }

    /// Prior variance `k(z, z)`.
    pub fn prior_variance(&self) -> f64 {
        self.signal_variance
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn se01() -> KernelSpec {
        KernelSpec::squared_exponential(0.1).unwrap()
    }

    #[test]
    fn identity_value_is_signal_variance() {
        let k = se01();
        let z = [0.3, 0.7];
        assert_eq!(k.eval(&z, &z).unwrap(), 1.0);
        let k2 = KernelSpec::new(KernelFamily::SquaredExponential, 0.2, 2.5).unwrap();
        assert_eq!(k2.eval(&z, &z).unwrap(), 2.5);
    }

    #[test]
    fn se_at_one_length_scale_distance() {
        // ||z - z2|| = 0.1 with l = 0.1 gives exp(-1/2).
        let k = se01();
        let v = k.eval(&[0.0, 0.0], &[0.1, 0.0]).unwrap();
        assert_relative_eq!(v, 0.606_530_659_712_633_4, epsilon = 1e-15);
    }

    #[test]
    fn symmetric_on_random_pairs() {
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for spec in [
            se01(),
            KernelSpec::matern(MaternNu::ThreeHalves, 0.3).unwrap(),
            KernelSpec::matern(MaternNu::FiveHalves, 0.3).unwrap(),
        ] {
            for _ in 0..100 {
                let z: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                let z2: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
                assert_eq!(spec.eval(&z, &z2).unwrap(), spec.eval(&z2, &z).unwrap());
            }
        }
    }

    #[test]
    fn bounded_by_signal_variance() {
        let mut rng = ChaCha12Rng::seed_from_u64(12);
        for spec in [
            se01(),
            KernelSpec::matern(MaternNu::ThreeHalves, 0.1).unwrap(),
            KernelSpec::matern(MaternNu::FiveHalves, 0.1).unwrap(),
        ] {
            for _ in 0..200 {
                let z: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
                let z2: Vec<f64> = (0..2).map(|_| rng.random::<f64>()).collect();
                let v = spec.eval(&z, &z2).unwrap();
                assert!(v <= spec.signal_variance + 1e-15);
                assert!(v >= 0.0);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let k = se01();
        assert!(matches!(
            k.eval(&[0.0], &[0.0, 1.0]),
            Err(KernelError::DimensionMismatch(1, 2))
        ));
    }

    #[test]
    fn rejects_bad_hyperparameters() {
        assert!(KernelSpec::squared_exponential(0.0).is_err());
        assert!(KernelSpec::squared_exponential(-1.0).is_err());
        assert!(KernelSpec::new(KernelFamily::SquaredExponential, 0.1, 0.0).is_err());
    }
}
