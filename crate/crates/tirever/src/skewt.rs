//! Two-piece skewed Student-t innovation law.
//!
//! Density with skewness gamma, degrees of freedom nu and scale sigma:
//!
//! ```text
//! f(x) = (1/sigma) * 2/(gamma + 1/gamma) * [ g(z/gamma)  if z >= 0
//!                                            g(z*gamma)  if z <  0 ],  z = x/sigma
//! ```
//!
//! where g is the standard Student-t density with nu degrees of freedom.
//! gamma = 1 recovers the symmetric t; the estimation layer fixes gamma = 1
//! and the simulator accepts any gamma > 0.

use rand::Rng;
use rand_distr::{Distribution, StudentT};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::ln_gamma;

/// Degrees of freedom above which the law is treated as effectively Gaussian;
/// fits report this cap when the likelihood keeps climbing toward it.
pub const NU_MAX: f64 = 200.0;

/// Lower bound on degrees of freedom: variance must exist.
pub const NU_MIN: f64 = 2.0;

/// Parameters of the skewed Student-t law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SkewTParams {
    /// Degrees of freedom, in (2, 200].
    pub nu: f64,
    /// Skewness parameter, positive; 1 means symmetric.
    pub gamma: f64,
    /// Scale, positive.
    pub sigma: f64,
}

impl SkewTParams {
    pub fn new(nu: f64, gamma: f64, sigma: f64) -> Result<Self> {
        let params = SkewTParams { nu, gamma, sigma };
        params.validate()?;
        Ok(params)
    }

    /// Re-checks the parameter domain; needed after deserialization, which
    /// bypasses [`SkewTParams::new`].
    pub fn validate(&self) -> Result<()> {
        let SkewTParams { nu, gamma, sigma } = *self;
        if !nu.is_finite() || nu <= NU_MIN || nu > NU_MAX {
            return Err(Error::Invalid(format!(
                "degrees of freedom must lie in ({NU_MIN}, {NU_MAX}], got {nu}"
            )));
        }
        if !gamma.is_finite() || gamma <= 0.0 {
            return Err(Error::Invalid(format!(
                "skewness parameter must be positive, got {gamma}"
            )));
        }
        if !sigma.is_finite() || sigma <= 0.0 {
            return Err(Error::Invalid(format!("scale must be positive, got {sigma}")));
        }
        Ok(())
    }

    /// Symmetric Student-t with scale.
    pub fn symmetric(nu: f64, sigma: f64) -> Result<Self> {
        SkewTParams::new(nu, 1.0, sigma)
    }

    /// Log-density at `x`.
    pub fn logpdf(&self, x: f64) -> f64 {
        let z = x / self.sigma;
        let u = if z >= 0.0 { z / self.gamma } else { z * self.gamma };
        let c = student_t_log_norm(self.nu);
        let piece = (2.0 / (self.gamma + 1.0 / self.gamma)).ln();
        piece + c - 0.5 * (self.nu + 1.0) * (u * u / self.nu).ln_1p() - self.sigma.ln()
    }

    /// One draw. Consumes exactly one Student-t variate and one uniform from
    /// `rng`, in that order; callers relying on stream reproducibility can
    /// count on that usage pattern.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let t_law = StudentT::new(self.nu).expect("nu validated at construction");
        sample_one(self, &t_law, rng)
    }

    /// `n` draws from one pass over the stream.
    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<f64> {
        let t_law = StudentT::new(self.nu).expect("nu validated at construction");
        (0..n).map(|_| sample_one(self, &t_law, rng)).collect()
    }
}

fn sample_one<R: Rng + ?Sized>(p: &SkewTParams, t_law: &StudentT<f64>, rng: &mut R) -> f64 {
    let magnitude = t_law.sample(rng).abs();
    let p_positive = p.gamma * p.gamma / (1.0 + p.gamma * p.gamma);
    if rng.random::<f64>() < p_positive {
        magnitude * p.gamma * p.sigma
    } else {
        -magnitude / p.gamma * p.sigma
    }
}

/// Log normalizing constant of the standard Student-t density:
/// ln Gamma((nu+1)/2) - ln Gamma(nu/2) - ln sqrt(nu pi).
fn student_t_log_norm(nu: f64) -> f64 {
    ln_gamma((nu + 1.0) / 2.0) - ln_gamma(nu / 2.0) - 0.5 * (nu * std::f64::consts::PI).ln()
}

/// Sum of symmetric Student-t log-densities with scale; the likelihood hot
/// path (estimation fixes gamma = 1). The normalizing constant is computed
/// once per call.
pub(crate) fn student_t_loglik(residuals: &[f64], nu: f64, sigma: f64) -> f64 {
    if !(nu > NU_MIN) || !(sigma > 0.0) || !nu.is_finite() || !sigma.is_finite() {
        return f64::NEG_INFINITY;
    }
    let c = student_t_log_norm(nu) - sigma.ln();
    let half = 0.5 * (nu + 1.0);
    let mut acc = 0.0;
    for &e in residuals {
        let z = e / sigma;
        acc += c - half * (z * z / nu).ln_1p();
    }
    acc
}
