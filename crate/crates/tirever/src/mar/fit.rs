//! Approximate maximum likelihood for MAR models under symmetric Student-t
//! innovations.
//!
//! The optimizer works in a transformed space where every point is a valid
//! parameter vector: degrees of freedom enter as nu = 2 + exp(a) (capped) and
//! scale as sigma = exp(b). Autoregressive coefficients stay in natural units
//! and are kept inside the stationarity margin by an infinite penalty.
//!
//! The restricted (palindromic) model shares one coefficient vector between
//! the causal and noncausal sides. When the unrestricted model has r = s, its
//! start set includes the restricted optimum expanded to both sides, and both
//! problems evaluate that point with bitwise-identical arithmetic. The
//! unrestricted optimum can therefore never fall below the restricted one,
//! which keeps likelihood-ratio statistics nonnegative by construction.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::{is_margin_feasible, max_inverse_root_modulus, residuals_into, MarSpec};
use crate::error::{Error, Result};
use crate::optim::minimize;
use crate::series::TimeSeries;
use crate::skewt::{student_t_loglik, SkewTParams, NU_MAX, NU_MIN};

/// Information criterion used to rank fitted models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IcKind {
    Aic,
    #[default]
    Bic,
}

impl IcKind {
    /// Criterion value from a log-likelihood, a free-parameter count, and the
    /// effective sample size.
    pub fn value(self, loglik: f64, n_params: usize, n_effective: usize) -> f64 {
        let penalty = match self {
            IcKind::Aic => 2.0 * n_params as f64,
            IcKind::Bic => n_params as f64 * (n_effective as f64).ln(),
        };
        -2.0 * loglik + penalty
    }
}

/// A fitted MAR model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MarFit {
    pub spec: MarSpec,
    /// True when the causal and noncausal coefficient vectors were
    /// constrained to be equal during estimation.
    pub restricted: bool,
    /// Sample mean removed before estimation.
    pub mean: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    /// Standard errors of the autoregressive coefficients, causal side first
    /// (restricted models report the shared vector once). All NaN when the
    /// information matrix could not be inverted.
    pub std_errors: Vec<f64>,
    /// Residual count entering the likelihood: T - r - s.
    pub n_effective: usize,
    pub converged: bool,
}

impl MarFit {
    pub fn r(&self) -> usize {
        self.spec.r()
    }

    pub fn s(&self) -> usize {
        self.spec.s()
    }

    pub fn order(&self) -> usize {
        self.spec.order()
    }

    /// Free parameters: autoregressive coefficients plus degrees of freedom
    /// and scale.
    pub fn n_params(&self) -> usize {
        let n_coef = if self.restricted { self.s() } else { self.order() };
        n_coef + 2
    }

    pub fn ic(&self, kind: IcKind) -> f64 {
        match kind {
            IcKind::Aic => self.aic,
            IcKind::Bic => self.bic,
        }
    }
}

/// Target margin for start projection, strictly inside the feasibility
/// boundary so optimizers begin in the interior.
const START_MARGIN: f64 = 0.985;

/// Degrees-of-freedom start (nu = 6) in transformed units.
const A_START: f64 = 1.386_294_361_119_890_6;

fn nu_from(a: f64) -> f64 {
    (NU_MIN + a.exp().max(1e-6)).min(NU_MAX)
}

/// Least-squares AR(p) coefficients without intercept, regressing values[t]
/// on the p preceding values for t in start..len. `start` must be at least p;
/// passing a common `start` across candidate orders keeps their samples
/// aligned.
pub(crate) fn ols_ar(values: &[f64], p: usize, start: usize) -> Result<Vec<f64>> {
    if p == 0 {
        return Ok(Vec::new());
    }
    debug_assert!(start >= p);
    let t_len = values.len();
    if t_len < start + p + 1 {
        return Err(Error::TooShort {
            needed: start + p + 1,
            got: t_len,
        });
    }
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = nalgebra::DVector::<f64>::zeros(p);
    for t in start..t_len {
        for i in 0..p {
            let xi = values[t - 1 - i];
            xty[i] += xi * values[t];
            for j in i..p {
                xtx[(i, j)] += xi * values[t - 1 - j];
            }
        }
    }
    for i in 0..p {
        for j in 0..i {
            xtx[(i, j)] = xtx[(j, i)];
        }
    }
    let chol = nalgebra::linalg::Cholesky::new(xtx)
        .ok_or_else(|| Error::Degenerate("singular design in least-squares start".to_string()))?;
    Ok(chol.solve(&xty).iter().cloned().collect())
}

/// Scales a coefficient vector toward zero until its reciprocal roots sit
/// inside the start margin. Zero is always feasible, so this terminates.
fn project_to_margin(coeffs: &mut [f64]) {
    // Shrinking toward the origin always lands inside the stability margin
    // eventually, but the loop must still be bounded: a degenerate vector
    // whose modulus evaluates as infinite no matter the scale would spin
    // forever. 500 halvings-by-0.9 cover any representible magnitude; past
    // that, fall back to the origin, which is feasible by construction.
    for _ in 0..500 {
        if max_inverse_root_modulus(coeffs) <= START_MARGIN {
            return;
        }
        for c in coeffs.iter_mut() {
            *c *= 0.9;
        }
    }
    coeffs.fill(0.0);
}

/// The estimation problem for one (r, s, restricted) configuration over a
/// demeaned sample.
struct FitProblem<'a> {
    values: &'a [f64],
    r: usize,
    s: usize,
    restricted: bool,
}

impl FitProblem<'_> {
    fn n_coef(&self) -> usize {
        if self.restricted {
            self.s
        } else {
            self.r + self.s
        }
    }

    fn n_params(&self) -> usize {
        self.n_coef() + 2
    }

    /// Negative log-likelihood in transformed parameters, infinite outside
    /// the feasible region.
    fn objective(&self, theta: &[f64], u: &mut Vec<f64>, eps: &mut Vec<f64>) -> f64 {
        let n_coef = self.n_coef();
        let coeffs = &theta[..n_coef];
        let (causal, noncausal) = if self.restricted {
            (coeffs, coeffs)
        } else {
            coeffs.split_at(self.r)
        };
        if !is_margin_feasible(causal) {
            return f64::INFINITY;
        }
        if !self.restricted && !is_margin_feasible(noncausal) {
            return f64::INFINITY;
        }
        let nu = nu_from(theta[n_coef]);
        let sigma = theta[n_coef + 1].exp();
        residuals_into(self.values, causal, noncausal, u, eps);
        let ll = student_t_loglik(eps, nu, sigma);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    }

    /// Negative log-likelihood in natural parameters [coeffs.., nu, sigma],
    /// used only for curvature estimates. The nu domain extends past the
    /// estimation cap so central differences remain defined at the cap.
    fn objective_natural(&self, theta: &[f64], u: &mut Vec<f64>, eps: &mut Vec<f64>) -> f64 {
        let n_coef = self.n_coef();
        let coeffs = &theta[..n_coef];
        let (causal, noncausal) = if self.restricted {
            (coeffs, coeffs)
        } else {
            coeffs.split_at(self.r)
        };
        if !is_margin_feasible(causal) {
            return f64::INFINITY;
        }
        if !self.restricted && !is_margin_feasible(noncausal) {
            return f64::INFINITY;
        }
        let nu = theta[n_coef];
        let sigma = theta[n_coef + 1];
        if !(nu > NU_MIN) || nu > 2.0 * NU_MAX || !(sigma > 0.0) {
            return f64::INFINITY;
        }
        residuals_into(self.values, causal, noncausal, u, eps);
        let ll = student_t_loglik(eps, nu, sigma);
        if ll.is_finite() {
            -ll
        } else {
            f64::INFINITY
        }
    }

    /// Coefficient starts in natural units, before margin projection.
    fn coefficient_starts(&self) -> Vec<Vec<f64>> {
        let mut starts = Vec::new();
        if self.restricted {
            let s = self.s;
            if let Ok(w) = ols_ar(self.values, s, s) {
                starts.push(w);
            }
            let reversed: Vec<f64> = self.values.iter().rev().cloned().collect();
            if let Ok(w) = ols_ar(&reversed, s, s) {
                starts.push(w);
            }
            if s <= 2 {
                starts.extend(sign_patterns(s));
            } else {
                starts.push(vec![0.0; s]);
            }
        } else {
            let (r, s) = (self.r, self.s);
            let p = r + s;
            // Causal least squares filling the causal side, zeros elsewhere.
            let mut fwd = vec![0.0; p];
            if let Ok(w) = ols_ar(self.values, r, r) {
                fwd[..r].copy_from_slice(&w);
            }
            starts.push(fwd);
            // The mirror image: least squares on the reversed sample feeds
            // the noncausal side.
            let reversed: Vec<f64> = self.values.iter().rev().cloned().collect();
            let mut bwd = vec![0.0; p];
            if let Ok(w) = ols_ar(&reversed, s, s) {
                bwd[r..].copy_from_slice(&w);
            }
            starts.push(bwd);
            if r <= 2 && s <= 2 {
                starts.extend(sign_patterns(p));
            } else {
                starts.push(vec![0.0; p]);
            }
        }
        starts
    }
}

/// All sign combinations of magnitude 0.1 in `n` coordinates.
fn sign_patterns(n: usize) -> Vec<Vec<f64>> {
    (0..1usize << n)
        .map(|mask| {
            (0..n)
                .map(|i| if mask >> i & 1 == 1 { 0.1 } else { -0.1 })
                .collect()
        })
        .collect()
}

struct CoreFit {
    /// Optimum in transformed units: [coeffs.., a, b].
    theta: Vec<f64>,
    neg_loglik: f64,
    converged: bool,
}

/// Multi-start optimization over the transformed parameter space.
/// `extra_starts` are complete transformed vectors appended to the built-in
/// start set and used verbatim.
fn fit_core(
    values: &[f64],
    r: usize,
    s: usize,
    restricted: bool,
    extra_starts: &[Vec<f64>],
) -> Result<CoreFit> {
    let problem = FitProblem {
        values,
        r,
        s,
        restricted,
    };
    let n_coef = problem.n_coef();
    let n = problem.n_params();

    let sample_sd = {
        let m = values.iter().sum::<f64>() / values.len() as f64;
        let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / values.len() as f64;
        v.sqrt()
    };
    if !(sample_sd > 0.0) {
        return Err(Error::Degenerate(
            "sample is numerically constant; likelihood has no optimum".to_string(),
        ));
    }

    let mut u = Vec::new();
    let mut eps = Vec::new();

    let mut starts: Vec<Vec<f64>> = Vec::new();
    for mut coeffs in problem.coefficient_starts() {
        if restricted {
            project_to_margin(&mut coeffs);
        } else {
            project_to_margin(&mut coeffs[..r]);
            project_to_margin(&mut coeffs[r..]);
        }
        // Scale start: the residual standard deviation at these coefficients.
        let (causal, noncausal): (&[f64], &[f64]) = if restricted {
            (&coeffs, &coeffs)
        } else {
            coeffs.split_at(r)
        };
        residuals_into(values, causal, noncausal, &mut u, &mut eps);
        let resid_sd = {
            let m = eps.iter().sum::<f64>() / eps.len() as f64;
            let v = eps.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / eps.len() as f64;
            v.sqrt()
        };
        let b0 = if resid_sd > 0.0 {
            resid_sd.ln()
        } else {
            sample_sd.ln()
        };
        let mut theta = coeffs;
        theta.push(A_START);
        theta.push(b0);
        starts.push(theta);
    }
    starts.extend(extra_starts.iter().cloned());

    let steps: Vec<f64> = (0..n)
        .map(|i| if i < n_coef { 0.15 } else if i == n_coef { 0.6 } else { 0.5 })
        .collect();
    let max_nm_evals = 150 * (n + 1) + 300;

    let mut best: Option<crate::optim::OptimResult> = None;
    for start in &starts {
        let result = minimize(
            |theta| problem.objective(theta, &mut u, &mut eps),
            start,
            &steps,
            max_nm_evals,
        );
        let replace = match &best {
            Some(b) => result.f < b.f,
            None => result.f.is_finite(),
        };
        if replace {
            best = Some(result);
        }
    }

    let best = best.ok_or_else(|| {
        Error::Optimizer(format!(
            "no feasible starting point for MAR({r}, {s}) produced a finite likelihood"
        ))
    })?;
    Ok(CoreFit {
        neg_loglik: best.f,
        converged: best.converged,
        theta: best.x,
    })
}

/// Central-difference Hessian with per-coordinate steps
/// max(1e-4, 1e-4 |x_i|). Steps are halved up to three times if an evaluation
/// is not finite; returns None if the surface stays unusable.
fn hessian(mut f: impl FnMut(&[f64]) -> f64, x: &[f64]) -> Option<DMatrix<f64>> {
    let n = x.len();
    let f0 = f(x);
    if !f0.is_finite() {
        return None;
    }
    let mut h: Vec<f64> = x.iter().map(|&xi| (1e-4 * xi.abs()).max(1e-4)).collect();
    'attempt: for _ in 0..4 {
        let mut m = DMatrix::<f64>::zeros(n, n);
        let mut xw = x.to_vec();
        for i in 0..n {
            xw[i] = x[i] + h[i];
            let fp = f(&xw);
            xw[i] = x[i] - h[i];
            let fm = f(&xw);
            xw[i] = x[i];
            if !fp.is_finite() || !fm.is_finite() {
                for step in h.iter_mut() {
                    *step *= 0.5;
                }
                continue 'attempt;
            }
            m[(i, i)] = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
        }
        for i in 0..n {
            for j in i + 1..n {
                let mut corner = |si: f64, sj: f64| {
                    xw[i] = x[i] + si * h[i];
                    xw[j] = x[j] + sj * h[j];
                    let v = f(&xw);
                    xw[i] = x[i];
                    xw[j] = x[j];
                    v
                };
                let (pp, pm, mp, mm) =
                    (corner(1.0, 1.0), corner(1.0, -1.0), corner(-1.0, 1.0), corner(-1.0, -1.0));
                if !(pp.is_finite() && pm.is_finite() && mp.is_finite() && mm.is_finite()) {
                    for step in h.iter_mut() {
                        *step *= 0.5;
                    }
                    continue 'attempt;
                }
                let v = (pp - pm - mp + mm) / (4.0 * h[i] * h[j]);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        return Some(m);
    }
    None
}

/// Standard errors of the first `n_coef` parameters from the observed
/// information (the Hessian of the negative log-likelihood). Falls back to
/// the coefficient block when the full matrix will not invert cleanly.
fn std_errors_from(info: &DMatrix<f64>, n_coef: usize) -> Option<Vec<f64>> {
    let extract = |inv: &DMatrix<f64>| -> Option<Vec<f64>> {
        let diag: Vec<f64> = (0..n_coef).map(|i| inv[(i, i)]).collect();
        if diag.iter().all(|&v| v.is_finite() && v > 0.0) {
            Some(diag.iter().map(|v| v.sqrt()).collect())
        } else {
            None
        }
    };
    if let Some(inv) = info.clone().try_inverse() {
        if let Some(se) = extract(&inv) {
            return Some(se);
        }
    }
    let block = info.view((0, 0), (n_coef, n_coef)).into_owned();
    if let Some(inv) = block.try_inverse() {
        if let Some(se) = extract(&inv) {
            return Some(se);
        }
    }
    None
}

/// Fits a MAR(r, s) model to `series` by approximate maximum likelihood.
///
/// The sample mean is removed before estimation and reported in the result.
/// With `restricted` set (requires r = s >= 1), one coefficient vector is
/// shared between the two sides.
pub fn mar_fit(series: &TimeSeries, r: usize, s: usize, restricted: bool) -> Result<MarFit> {
    if restricted && (r != s || s == 0) {
        return Err(Error::Invalid(format!(
            "the restricted model needs equal positive orders, got r = {r}, s = {s}"
        )));
    }
    if r + s == 0 {
        return Err(Error::Invalid(
            "at least one autoregressive coefficient is required".to_string(),
        ));
    }
    let t_len = series.len();
    let n_coef = if restricted { s } else { r + s };
    let k = n_coef + 2;
    let min_eff = (2 * k).max(8);
    if t_len < r + s + min_eff {
        return Err(Error::TooShort {
            needed: r + s + min_eff,
            got: t_len,
        });
    }
    let n_effective = t_len - r - s;

    let mean = series.mean();
    let values: Vec<f64> = series.values().iter().map(|v| v - mean).collect();

    // For r = s the unrestricted search starts from the restricted optimum
    // expanded to both sides; both objectives evaluate that point with
    // identical arithmetic, so the unrestricted likelihood cannot come out
    // lower.
    let mut extra = Vec::new();
    if !restricted && r == s && s >= 1 {
        if let Ok(core) = fit_core(&values, s, s, true, &[]) {
            let (omega, tail) = core.theta.split_at(s);
            let mut seed = Vec::with_capacity(2 * s + 2);
            seed.extend_from_slice(omega);
            seed.extend_from_slice(omega);
            seed.extend_from_slice(tail);
            extra.push(seed);
        }
    }

    let core = fit_core(&values, r, s, restricted, &extra)?;
    let coeffs = &core.theta[..n_coef];
    let nu = nu_from(core.theta[n_coef]);
    let sigma = core.theta[n_coef + 1].exp();
    let loglik = -core.neg_loglik;

    let (causal, noncausal) = if restricted {
        (coeffs.to_vec(), coeffs.to_vec())
    } else {
        let (c, nc) = coeffs.split_at(r);
        (c.to_vec(), nc.to_vec())
    };
    let spec = MarSpec::new(causal, noncausal, SkewTParams::symmetric(nu, sigma)?)?;

    let problem = FitProblem {
        values: &values,
        r,
        s,
        restricted,
    };
    let mut natural: Vec<f64> = coeffs.to_vec();
    natural.push(nu);
    natural.push(sigma);
    let mut u = Vec::new();
    let mut eps = Vec::new();
    let se = hessian(
        |theta| problem.objective_natural(theta, &mut u, &mut eps),
        &natural,
    )
    .and_then(|info| std_errors_from(&info, n_coef));
    let (std_errors, se_ok) = match se {
        Some(se) => (se, true),
        None => (vec![f64::NAN; n_coef], false),
    };

    Ok(MarFit {
        spec,
        restricted,
        mean,
        loglik,
        aic: IcKind::Aic.value(loglik, k, n_effective),
        bic: IcKind::Bic.value(loglik, k, n_effective),
        std_errors,
        n_effective,
        converged: core.converged && se_ok,
    })
}

/// Fits every MAR(r, s) with r + s = p, plus the restricted model when p is
/// even, and returns them sorted by the chosen criterion (ties prefer the
/// larger noncausal order, then the unrestricted model).
pub fn mar_grid(series: &TimeSeries, p: usize, criterion: IcKind) -> Result<Vec<MarFit>> {
    if p == 0 {
        return Err(Error::Invalid(
            "model order must be positive".to_string(),
        ));
    }
    let mut fits = Vec::with_capacity(p + 2);
    for r in 0..=p {
        fits.push(mar_fit(series, r, p - r, false)?);
    }
    if p.is_multiple_of(2) {
        fits.push(mar_fit(series, p / 2, p / 2, true)?);
    }
    fits.sort_by(|a, b| {
        a.ic(criterion)
            .total_cmp(&b.ic(criterion))
            .then_with(|| b.s().cmp(&a.s()))
            .then_with(|| a.restricted.cmp(&b.restricted))
    });
    Ok(fits)
}

#[cfg(test)]
mod tests {
    use super::super::{mar_simulate, DEFAULT_BURN_IN};
    use super::*;
    use crate::rng::derive_rng;
    use crate::series::Frequency;

    fn t3() -> SkewTParams {
        SkewTParams::symmetric(3.0, 1.0).unwrap()
    }

    fn simulate(spec: &MarSpec, t_len: usize, seed: u64) -> TimeSeries {
        let mut rng = derive_rng(seed, &[100]);
        mar_simulate(spec, t_len, DEFAULT_BURN_IN, &mut rng).unwrap()
    }

    #[test]
    fn information_criteria_formulas() {
        let ll = -100.0;
        assert!((IcKind::Aic.value(ll, 3, 50) - 206.0).abs() < 1e-12);
        let want_bic = 200.0 + 3.0 * (50.0f64).ln();
        assert!((IcKind::Bic.value(ll, 3, 50) - want_bic).abs() < 1e-12);
    }

    #[test]
    fn ols_recovers_an_ar1_coefficient() {
        let spec = MarSpec::new(vec![0.8], vec![], t3()).unwrap();
        let y = simulate(&spec, 4000, 17);
        let m = y.mean();
        let demeaned: Vec<f64> = y.values().iter().map(|v| v - m).collect();
        let w = ols_ar(&demeaned, 1, 1).unwrap();
        assert!((w[0] - 0.8).abs() < 0.05, "got {}", w[0]);
    }

    #[test]
    fn fit_recovers_causal_ar1() {
        let spec = MarSpec::new(vec![0.8], vec![], t3()).unwrap();
        let y = simulate(&spec, 800, 3);
        let fit = mar_fit(&y, 1, 0, false).unwrap();
        assert!((fit.spec.causal[0] - 0.8).abs() < 0.06, "{:?}", fit.spec.causal);
        assert!(fit.spec.innovation.nu > 2.0 && fit.spec.innovation.nu < 20.0);
        assert!((fit.spec.innovation.sigma - 1.0).abs() < 0.2);
        assert_eq!(fit.n_effective, 799);
        assert!(fit.converged);
        assert!(fit.std_errors.len() == 1 && fit.std_errors[0].is_finite());
        assert!(fit.std_errors[0] > 0.003 && fit.std_errors[0] < 0.12);
    }

    #[test]
    fn fit_recovers_noncausal_orientation() {
        // Heavy tails identify the direction of time: the purely noncausal
        // truth must beat the purely causal rival in likelihood.
        let spec = MarSpec::new(vec![], vec![0.8], t3()).unwrap();
        let y = simulate(&spec, 600, 11);
        let fwd = mar_fit(&y, 1, 0, false).unwrap();
        let bwd = mar_fit(&y, 0, 1, false).unwrap();
        assert!(
            bwd.loglik > fwd.loglik,
            "noncausal {} vs causal {}",
            bwd.loglik,
            fwd.loglik
        );
        assert!((bwd.spec.noncausal[0] - 0.8).abs() < 0.08);
    }

    #[test]
    fn restricted_fit_recovers_shared_coefficient() {
        let spec = MarSpec::new(vec![0.5], vec![0.5], t3()).unwrap();
        let y = simulate(&spec, 600, 7);
        let fit = mar_fit(&y, 1, 1, true).unwrap();
        assert!(fit.restricted);
        assert_eq!(fit.spec.causal, fit.spec.noncausal);
        assert!((fit.spec.causal[0] - 0.5).abs() < 0.08, "{:?}", fit.spec.causal);
        assert_eq!(fit.n_params(), 3);
    }

    #[test]
    fn unrestricted_loglik_never_falls_below_restricted() {
        // Holds exactly, not merely to tolerance: the unrestricted search
        // starts from the expanded restricted optimum.
        for seed in [1u64, 2, 3, 4, 5] {
            let spec = MarSpec::new(vec![0.6], vec![0.6], t3()).unwrap();
            let y = simulate(&spec, 300, seed);
            let res = mar_fit(&y, 1, 1, true).unwrap();
            let unres = mar_fit(&y, 1, 1, false).unwrap();
            assert!(
                unres.loglik >= res.loglik,
                "seed {seed}: unrestricted {} < restricted {}",
                unres.loglik,
                res.loglik
            );
        }
    }

    #[test]
    fn fit_mean_tracks_location_shifts() {
        let spec = MarSpec::new(vec![0.7], vec![], t3()).unwrap();
        let y = simulate(&spec, 500, 23);
        let shifted =
            TimeSeries::new(y.values().iter().map(|v| v + 50.0).collect::<Vec<_>>(),
                Frequency::Unspecified, "shifted").unwrap();
        let base = mar_fit(&y, 1, 0, false).unwrap();
        let moved = mar_fit(&shifted, 1, 0, false).unwrap();
        assert!((moved.mean - (base.mean + 50.0)).abs() < 1e-9);
        assert!((moved.spec.causal[0] - base.spec.causal[0]).abs() < 1e-5);
    }

    #[test]
    fn grid_is_sorted_and_complete() {
        let spec = MarSpec::new(vec![0.8], vec![0.1], t3()).unwrap();
        let y = simulate(&spec, 400, 31);
        let fits = mar_grid(&y, 2, IcKind::Bic).unwrap();
        // (0,2), (1,1), (2,0), plus the restricted (1,1).
        assert_eq!(fits.len(), 4);
        assert_eq!(fits.iter().filter(|f| f.restricted).count(), 1);
        for w in fits.windows(2) {
            assert!(w[0].ic(IcKind::Bic) <= w[1].ic(IcKind::Bic));
        }
        for f in &fits {
            assert!(f.restricted || f.order() == 2);
        }
    }

    #[test]
    fn grid_identifies_the_mixed_model() {
        let spec = MarSpec::new(vec![0.8], vec![0.5], t3()).unwrap();
        let y = simulate(&spec, 1000, 41);
        let fits = mar_grid(&y, 2, IcKind::Bic).unwrap();
        let best = &fits[0];
        assert!(!best.restricted);
        assert_eq!((best.r(), best.s()), (1, 1));
        assert!((best.spec.causal[0] - 0.8).abs() < 0.08);
        assert!((best.spec.noncausal[0] - 0.5).abs() < 0.08);
    }

    #[test]
    fn short_samples_are_rejected() {
        let y = TimeSeries::new(
            (0..12).map(|i| (i as f64 * 1.3).sin()).collect::<Vec<_>>(),
            Frequency::Unspecified,
            "short",
        )
        .unwrap();
        assert!(matches!(
            mar_fit(&y, 2, 2, false),
            Err(Error::TooShort { .. })
        ));
        assert!(matches!(
            mar_fit(&y, 0, 0, false),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            mar_fit(&y, 1, 2, true),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn constant_series_is_degenerate() {
        let y = TimeSeries::new(vec![2.5; 60], Frequency::Unspecified, "flat").unwrap();
        assert!(matches!(
            mar_fit(&y, 1, 0, false),
            Err(Error::Degenerate(_))
        ));
    }
}
