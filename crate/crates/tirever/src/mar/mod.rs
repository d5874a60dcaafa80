//! Mixed causal-noncausal autoregressions.
//!
//! A MAR(r, s) process satisfies phi(L) varphi(L^{-1}) Y_t = eps_t where
//! phi(z) = 1 - phi_1 z - ... - phi_r z^r acts on the past, varphi acts on the
//! future, and both polynomials keep their roots strictly outside the unit
//! circle. The process is time-reversible exactly when r = s and the two
//! coefficient vectors coincide (the palindromic or "restricted" case).

mod fit;

pub use fit::{mar_fit, mar_grid, IcKind, MarFit};
pub(crate) use fit::ols_ar;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Frequency, TimeSeries};
use crate::skewt::SkewTParams;

/// Stationarity margin: the largest admissible reciprocal root modulus. Kept
/// strictly inside 1 so likelihood evaluations stay numerically stable.
pub const ROOT_MARGIN: f64 = 0.99;

/// Default burn-in for simulation, applied on both ends of the sample.
pub const DEFAULT_BURN_IN: usize = 200;

/// A fully specified MAR(r, s) process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarSpec {
    /// Causal coefficients phi_1..phi_r.
    pub causal: Vec<f64>,
    /// Noncausal coefficients varphi_1..varphi_s.
    pub noncausal: Vec<f64>,
    pub innovation: SkewTParams,
}

impl MarSpec {
    pub fn new(causal: Vec<f64>, noncausal: Vec<f64>, innovation: SkewTParams) -> Result<Self> {
        let spec = MarSpec {
            causal,
            noncausal,
            innovation,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Checks root margins and innovation parameters; needed after
    /// deserialization, which bypasses [`MarSpec::new`].
    pub fn validate(&self) -> Result<()> {
        self.innovation.validate()?;
        for (name, coeffs) in [("causal", &self.causal), ("noncausal", &self.noncausal)] {
            if coeffs.iter().any(|c| !c.is_finite()) {
                return Err(Error::Invalid(format!(
                    "{name} coefficients must be finite"
                )));
            }
            let m = max_inverse_root_modulus(coeffs);
            if m > ROOT_MARGIN {
                return Err(Error::Invalid(format!(
                    "{name} polynomial violates the root margin: reciprocal root modulus {m:.4} > {ROOT_MARGIN}"
                )));
            }
        }
        Ok(())
    }

    pub fn r(&self) -> usize {
        self.causal.len()
    }

    pub fn s(&self) -> usize {
        self.noncausal.len()
    }

    /// Total autoregressive order p = r + s.
    pub fn order(&self) -> usize {
        self.r() + self.s()
    }

    /// The time-reversed process: causal and noncausal sides swap.
    pub fn reversed(&self) -> MarSpec {
        MarSpec {
            causal: self.noncausal.clone(),
            noncausal: self.causal.clone(),
            innovation: self.innovation,
        }
    }

    /// Reversibility condition on the specification itself: r = s with equal
    /// coefficient vectors (and a symmetric innovation law).
    pub fn is_palindromic(&self) -> bool {
        self.causal == self.noncausal
    }
}

/// Largest modulus among the reciprocal roots of 1 - c_1 z - ... - c_k z^k,
/// i.e. the spectral radius of the companion matrix. Returns 0 for an empty
/// polynomial. Orders one and two use closed forms; higher orders fall back
/// to companion-matrix eigenvalues.
pub fn max_inverse_root_modulus(coeffs: &[f64]) -> f64 {
    // Non-finite coefficients (overflowed optimizer trial points) count as
    // unstable outright; they must never reach the eigenvalue iteration.
    if coeffs.iter().any(|c| !c.is_finite()) {
        return f64::INFINITY;
    }
    // A trailing zero coefficient only adds a reciprocal root at the origin,
    // which can never be the largest modulus. Trimming keeps sparse trial
    // vectors away from the eigenvalue path, whose QR iteration does not
    // converge on the nilpotent companion matrix of an all-zero vector.
    let len = coeffs
        .iter()
        .rposition(|&c| c != 0.0)
        .map_or(0, |last| last + 1);
    let coeffs = &coeffs[..len];
    match coeffs.len() {
        0 => 0.0,
        1 => coeffs[0].abs(),
        2 => {
            // Reciprocal roots solve z^2 - c1 z - c2 = 0.
            let (c1, c2) = (coeffs[0], coeffs[1]);
            let disc = c1 * c1 + 4.0 * c2;
            if disc >= 0.0 {
                let root = disc.sqrt();
                ((c1 + root) * 0.5).abs().max(((c1 - root) * 0.5).abs())
            } else {
                // Conjugate pair with squared modulus -c2.
                (-c2).sqrt()
            }
        }
        k => {
            let mut companion = nalgebra::DMatrix::<f64>::zeros(k, k);
            for (j, &c) in coeffs.iter().enumerate() {
                companion[(0, j)] = c;
            }
            for i in 1..k {
                companion[(i, i - 1)] = 1.0;
            }
            // Bound the Schur iteration: the default eigenvalue path loops
            // without limit and can spin on ill-conditioned trial points. A
            // non-convergent decomposition is treated as unstable.
            match nalgebra::linalg::Schur::try_new(companion, f64::EPSILON, 10_000) {
                Some(schur) => schur
                    .complex_eigenvalues()
                    .iter()
                    .fold(0.0f64, |a, z| a.max(z.norm())),
                None => f64::INFINITY,
            }
        }
    }
}

pub(crate) fn is_margin_feasible(coeffs: &[f64]) -> bool {
    max_inverse_root_modulus(coeffs) <= ROOT_MARGIN
}

/// Two-pass residual filter. First the noncausal polynomial is applied
/// forward-looking, then the causal one:
///
/// ```text
/// u_t   = y_t - sum_j varphi_j y_{t+j}     (t = 0 .. T-s-1, 0-based)
/// eps_t = u_t - sum_i phi_i   u_{t-i}      (t = r .. T-s-1)
/// ```
///
/// yielding T - r - s residuals.
pub(crate) fn residuals_into(
    values: &[f64],
    causal: &[f64],
    noncausal: &[f64],
    u: &mut Vec<f64>,
    eps: &mut Vec<f64>,
) {
    let t_len = values.len();
    let r = causal.len();
    let s = noncausal.len();
    debug_assert!(t_len > r + s);

    u.clear();
    u.reserve(t_len - s);
    for t in 0..t_len - s {
        let mut v = values[t];
        for (j, &c) in noncausal.iter().enumerate() {
            v -= c * values[t + j + 1];
        }
        u.push(v);
    }

    eps.clear();
    eps.reserve(t_len - r - s);
    for t in r..u.len() {
        let mut v = u[t];
        for (i, &c) in causal.iter().enumerate() {
            v -= c * u[t - i - 1];
        }
        eps.push(v);
    }
}

/// Residual sequence of `series` under `spec` (coefficients only; the
/// innovation law plays no role here). No demeaning is applied.
pub fn mar_residuals(series: &TimeSeries, spec: &MarSpec) -> Result<Vec<f64>> {
    let needed = spec.order() + 1;
    if series.len() < needed {
        return Err(Error::TooShort {
            needed,
            got: series.len(),
        });
    }
    let mut u = Vec::new();
    let mut eps = Vec::new();
    residuals_into(series.values(), &spec.causal, &spec.noncausal, &mut u, &mut eps);
    Ok(eps)
}

/// Log-likelihood of `series` under the full specification (coefficients and
/// innovation law), summing the innovation log-density over the residuals.
pub fn mar_loglik(series: &TimeSeries, spec: &MarSpec) -> Result<f64> {
    spec.validate()?;
    let eps = mar_residuals(series, spec)?;
    Ok(eps.iter().map(|&e| spec.innovation.logpdf(e)).sum())
}

/// Simulates from an explicit innovation sequence of length
/// `t_len + 2 * burn_in`. The noncausal recursion runs backward from zero
/// terminal values, the causal recursion forward from zero initial values,
/// and the central `t_len` observations are returned.
pub fn mar_simulate_from_noise(
    spec: &MarSpec,
    eps: &[f64],
    t_len: usize,
    burn_in: usize,
) -> Result<Vec<f64>> {
    spec.validate()?;
    if t_len == 0 {
        return Err(Error::Invalid("simulation length must be positive".to_string()));
    }
    let n_ext = t_len + 2 * burn_in;
    if eps.len() != n_ext {
        return Err(Error::Invalid(format!(
            "noise length {} does not match t_len + 2 * burn_in = {n_ext}",
            eps.len()
        )));
    }

    // Backward pass: v_t = eps_t + sum_j varphi_j v_{t+j}.
    let mut v = vec![0.0; n_ext];
    for t in (0..n_ext).rev() {
        let mut acc = eps[t];
        for (j, &c) in spec.noncausal.iter().enumerate() {
            if t + j + 1 < n_ext {
                acc += c * v[t + j + 1];
            }
        }
        v[t] = acc;
    }

    // Forward pass: y_t = v_t + sum_i phi_i y_{t-i}.
    let mut y = vec![0.0; n_ext];
    for t in 0..n_ext {
        let mut acc = v[t];
        for (i, &c) in spec.causal.iter().enumerate() {
            if t > i {
                acc += c * y[t - i - 1];
            }
        }
        y[t] = acc;
    }

    Ok(y[burn_in..burn_in + t_len].to_vec())
}

/// Simulates a MAR path of length `t_len`, drawing innovations from the
/// specification's law. One innovation is drawn per extended-sample point, in
/// chronological order.
pub fn mar_simulate<R: Rng + ?Sized>(
    spec: &MarSpec,
    t_len: usize,
    burn_in: usize,
    rng: &mut R,
) -> Result<TimeSeries> {
    spec.validate()?;
    if t_len == 0 {
        return Err(Error::Invalid("simulation length must be positive".to_string()));
    }
    let n_ext = t_len + 2 * burn_in;
    let eps = spec.innovation.sample_n(n_ext, rng);
    let y = mar_simulate_from_noise(spec, &eps, t_len, burn_in)?;
    TimeSeries::new(y, Frequency::Unspecified, "mar")
}
