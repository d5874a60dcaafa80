//! The decision layer: two likelihood-based reversibility strategies, the
//! bicovariance test, pseudo-causal order selection, and the detrending
//! pipeline that composes them.
//!
//! Both model-based strategies share the same front end: select a total
//! autoregressive order for the series (or accept a known one), fit an
//! ordinary least-squares AR of that order, and screen its residuals for
//! Gaussianity. Under Gaussianity every stationary autoregression is
//! time-reversible and the causal/noncausal split is not identified, so the
//! verdict short-circuits there. The short-circuit belongs to the selection
//! step: when the caller fixes the order there is no selection fit to
//! screen, the diagnostic is reported but not acted on, and the verdict
//! always comes from the model comparison.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hp::{hp_decompose, hp_lambda};
use crate::mar::{mar_grid, ols_ar, IcKind, MarFit};
use crate::normality::{jarque_bera, NormalityReport};
use crate::series::TimeSeries;
use crate::special::chisq_sf;

/// Which reversibility procedure to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    /// Information-criterion comparison against the palindromic model.
    S1,
    /// Likelihood-ratio test against the palindromic model.
    S2,
    /// Bicovariance (signed third-moment) test.
    Rr,
}

impl std::fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StrategyKind::S1 => "s1",
            StrategyKind::S2 => "s2",
            StrategyKind::Rr => "rr",
        })
    }
}

/// Outcome of a model-based strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// Residuals passed the normality screen; reversibility holds without
    /// fitting any mixed model.
    ReversibleGaussian,
    Reversible,
    Irreversible,
}

/// Full record of a strategy run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrVerdict {
    pub strategy: StrategyKind,
    pub verdict: Verdict,
    /// Total order used at the final stage (after any even adjustment); the
    /// originally selected order when the normality gate decides.
    pub p_selected: usize,
    pub normality: NormalityReport,
    /// Candidate fits, empty when the gate decides. Strategy 1 sorts by its
    /// criterion; strategy 2 sorts by log-likelihood, restricted model last.
    pub fits: Vec<MarFit>,
    /// Strategy 1: criterion gap, restricted minus best unrestricted
    /// (positive favors irreversibility). Strategy 2: the LR statistic when
    /// the selected model has r = s.
    pub decisive_statistic: Option<f64>,
    /// Strategy 2 only: LR p-value when the selected model has r = s.
    pub decisive_p_value: Option<f64>,
}

impl TrVerdict {
    pub fn is_irreversible(&self) -> bool {
        self.verdict == Verdict::Irreversible
    }
}

/// Tuning knobs shared by both strategies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StrategyOptions {
    pub criterion: IcKind,
    /// Size of the likelihood-ratio test (strategy 2).
    pub alpha: f64,
    /// Size of the residual-normality screen.
    pub gate_alpha: f64,
    /// Total order supplied by the caller; skips order selection and makes
    /// the normality screen advisory (reported, never deciding).
    pub known_p: Option<usize>,
    /// Cap for order selection; defaults to [`default_p_max`].
    pub p_max: Option<usize>,
}

impl Default for StrategyOptions {
    fn default() -> Self {
        StrategyOptions {
            criterion: IcKind::default(),
            alpha: 0.05,
            gate_alpha: 0.05,
            known_p: None,
            p_max: None,
        }
    }
}

impl StrategyOptions {
    fn validate(&self) -> Result<()> {
        for (name, v) in [("alpha", self.alpha), ("gate_alpha", self.gate_alpha)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        if self.known_p == Some(0) {
            return Err(Error::Config("known model order must be positive".to_string()));
        }
        if self.p_max == Some(0) {
            return Err(Error::Config("order-selection cap must be positive".to_string()));
        }
        Ok(())
    }
}

/// Result of pseudo-causal order selection.
#[derive(Debug, Clone)]
pub struct OrderSelection {
    pub p: usize,
    /// Residuals of the winning least-squares fit over the common sample.
    pub residuals: Vec<f64>,
}

/// Default order-selection cap: min(floor(12 (T/100)^{1/4}), floor(T/10)),
/// never below 1.
pub fn default_p_max(t_len: usize) -> usize {
    let t = t_len as f64;
    let a = (12.0 * (t / 100.0).powf(0.25)).floor() as usize;
    let b = t_len / 10;
    a.min(b).max(1)
}

/// Least-squares residuals of an AR(p) without intercept on demeaned values,
/// regressing from `start` (at least p) to the end of the sample.
fn ar_ols_residuals(values: &[f64], p: usize, start: usize) -> Result<Vec<f64>> {
    let w = ols_ar(values, p, start)?;
    let mut residuals = Vec::with_capacity(values.len() - start);
    for t in start..values.len() {
        let mut e = values[t];
        for (i, &wi) in w.iter().enumerate() {
            e -= wi * values[t - 1 - i];
        }
        residuals.push(e);
    }
    Ok(residuals)
}

/// Selects the total autoregressive order by fitting OLS AR(p) for
/// p = 1..p_max on the demeaned series over a common effective sample (every
/// regression starts at t = p_max) and minimizing the chosen criterion under
/// a Gaussian likelihood. Ties go to the smaller order.
pub fn select_pseudo_causal_order(
    series: &TimeSeries,
    p_max: usize,
    criterion: IcKind,
) -> Result<OrderSelection> {
    if p_max == 0 {
        return Err(Error::Invalid("order-selection cap must be positive".to_string()));
    }
    if series.len() < p_max + 20 {
        return Err(Error::TooShort {
            needed: p_max + 20,
            got: series.len(),
        });
    }
    let mean = series.mean();
    let values: Vec<f64> = series.values().iter().map(|v| v - mean).collect();
    let n = values.len() - p_max;

    let mut best: Option<(f64, usize, Vec<f64>)> = None;
    for p in 1..=p_max {
        let residuals = ar_ols_residuals(&values, p, p_max)?;
        let sigma2 = residuals.iter().map(|e| e * e).sum::<f64>() / n as f64;
        if !(sigma2 > 0.0) {
            return Err(Error::Degenerate(
                "residual variance vanished during order selection".to_string(),
            ));
        }
        let loglik = -0.5
            * n as f64
            * ((2.0 * std::f64::consts::PI * sigma2).ln() + 1.0);
        let ic = criterion.value(loglik, p + 1, n);
        if best.as_ref().is_none_or(|(b, _, _)| ic < *b) {
            best = Some((ic, p, residuals));
        }
    }
    let (_, p, residuals) = best.expect("p_max >= 1 guarantees one candidate");
    Ok(OrderSelection { p, residuals })
}

/// Shared front end of both strategies: order determination plus the
/// residual-normality screen.
struct ScreenedOrder {
    p: usize,
    normality: NormalityReport,
}

fn screen(series: &TimeSeries, options: &StrategyOptions) -> Result<ScreenedOrder> {
    options.validate()?;
    if series.len() < 50 {
        return Err(Error::TooShort {
            needed: 50,
            got: series.len(),
        });
    }
    let (p, residuals) = match options.known_p {
        Some(p) => {
            let mean = series.mean();
            let values: Vec<f64> = series.values().iter().map(|v| v - mean).collect();
            (p, ar_ols_residuals(&values, p, p)?)
        }
        None => {
            let p_max = options.p_max.unwrap_or_else(|| default_p_max(series.len()));
            let selection = select_pseudo_causal_order(series, p_max, options.criterion)?;
            (selection.p, selection.residuals)
        }
    };
    let normality = jarque_bera(&residuals)?;
    Ok(ScreenedOrder { p, normality })
}

fn gated_verdict(strategy: StrategyKind, screened: &ScreenedOrder) -> TrVerdict {
    TrVerdict {
        strategy,
        verdict: Verdict::ReversibleGaussian,
        p_selected: screened.p,
        normality: screened.normality,
        fits: Vec::new(),
        decisive_statistic: None,
        decisive_p_value: None,
    }
}

/// Strategy 1 with default options (see [`strategy1_with`]).
pub fn strategy1(series: &TimeSeries, criterion: IcKind) -> Result<TrVerdict> {
    strategy1_with(
        series,
        &StrategyOptions {
            criterion,
            ..StrategyOptions::default()
        },
    )
}

/// Information-criterion strategy: select the order, screen for Gaussian
/// residuals, raise an odd order by one, fit every MAR(r, s) with r + s = p
/// alongside the palindromic model, and call the series reversible exactly
/// when the palindromic model attains the smallest criterion value.
///
/// The normality screen decides only when the order came from the data; a
/// caller-fixed order means there is no selection step whose residuals the
/// screen is defined on, so the verdict always comes from the fitted models
/// (the diagnostic is still reported).
pub fn strategy1_with(series: &TimeSeries, options: &StrategyOptions) -> Result<TrVerdict> {
    let screened = screen(series, options)?;
    if options.known_p.is_none() && screened.normality.p_value >= options.gate_alpha {
        return Ok(gated_verdict(StrategyKind::S1, &screened));
    }
    let p = if screened.p % 2 == 1 {
        screened.p + 1
    } else {
        screened.p
    };
    let fits = mar_grid(series, p, options.criterion)?;
    let restricted_ic = fits
        .iter()
        .find(|f| f.restricted)
        .map(|f| f.ic(options.criterion))
        .expect("even order grid always contains the restricted model");
    let best_unrestricted_ic = fits
        .iter()
        .filter(|f| !f.restricted)
        .map(|f| f.ic(options.criterion))
        .fold(f64::INFINITY, f64::min);
    let gap = restricted_ic - best_unrestricted_ic;
    let verdict = if gap <= 0.0 {
        Verdict::Reversible
    } else {
        Verdict::Irreversible
    };
    Ok(TrVerdict {
        strategy: StrategyKind::S1,
        verdict,
        p_selected: p,
        normality: screened.normality,
        fits,
        decisive_statistic: Some(gap),
        decisive_p_value: None,
    })
}

/// Strategy 2 with default options (see [`strategy2_with`]).
pub fn strategy2(series: &TimeSeries, alpha: f64) -> Result<TrVerdict> {
    strategy2_with(
        series,
        &StrategyOptions {
            alpha,
            ..StrategyOptions::default()
        },
    )
}

/// Likelihood-ratio strategy: after the shared screen (odd orders raised by
/// one, exactly as in strategy 1), pick the maximum-likelihood model among
/// all MAR(r, s) with r + s = p. An asymmetric winner (r != s) is
/// irreversible outright; a symmetric winner is tested against the
/// palindromic model with an LR statistic on s restrictions.
///
/// The normality screen follows the same rule as strategy 1: it decides only
/// when the order was selected from the data.
pub fn strategy2_with(series: &TimeSeries, options: &StrategyOptions) -> Result<TrVerdict> {
    let screened = screen(series, options)?;
    if options.known_p.is_none() && screened.normality.p_value >= options.gate_alpha {
        return Ok(gated_verdict(StrategyKind::S2, &screened));
    }
    let p = if screened.p % 2 == 1 {
        screened.p + 1
    } else {
        screened.p
    };
    let mut fits = mar_grid(series, p, options.criterion)?;

    let best = fits
        .iter()
        .filter(|f| !f.restricted)
        .fold(None::<&MarFit>, |acc, f| match acc {
            Some(b) if b.loglik >= f.loglik => Some(b),
            _ => Some(f),
        })
        .expect("grid always contains unrestricted fits")
        .clone();

    let (verdict, statistic, p_value) = if best.r() != best.s() {
        (Verdict::Irreversible, None, None)
    } else {
        let restricted = fits
            .iter()
            .find(|f| f.restricted)
            .expect("r = s forces an even order, so the grid has the restricted model");
        // Nonnegative by construction: the unrestricted search is seeded
        // from the restricted optimum.
        let lr = 2.0 * (best.loglik - restricted.loglik);
        let p_value = chisq_sf(lr, best.s())?;
        let verdict = if p_value < options.alpha {
            Verdict::Irreversible
        } else {
            Verdict::Reversible
        };
        (verdict, Some(lr), Some(p_value))
    };

    fits.sort_by(|a, b| {
        a.restricted
            .cmp(&b.restricted)
            .then_with(|| b.loglik.total_cmp(&a.loglik))
    });
    Ok(TrVerdict {
        strategy: StrategyKind::S2,
        verdict,
        p_selected: p,
        normality: screened.normality,
        fits,
        decisive_statistic: statistic,
        decisive_p_value: p_value,
    })
}

/// Variance estimator for the bicovariance statistic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VarianceMethod {
    /// Moment plug-in valid under an iid null.
    IidPlugin,
    /// Circular block bootstrap, block length ceil(T^{1/3}), 500 resamples.
    BlockBootstrap,
}

/// Bicovariance test report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrReport {
    pub k: usize,
    /// B_{2,1} - B_{1,2} on the standardized series, summed so that an exact
    /// palindrome yields exactly zero.
    pub gamma_hat: f64,
    pub b21: f64,
    pub b12: f64,
    pub variance_hat: f64,
    pub z_statistic: f64,
    /// Two-sided normal p-value.
    pub p_value: f64,
    pub variance_method: VarianceMethod,
}

impl RrReport {
    pub fn rejects(&self, alpha: f64) -> bool {
        self.p_value < alpha
    }
}

const BOOTSTRAP_RESAMPLES: usize = 500;

/// Sum of `term(t)` for t in lo..=hi, accumulated over mirrored index pairs
/// (lo, hi), (lo+1, hi-1), ... so that reversing the underlying series
/// reproduces the same partial sums up to exact sign handling.
fn mirrored_pair_sum(lo: usize, hi: usize, mut term: impl FnMut(usize) -> f64) -> f64 {
    let mut acc = 0.0;
    let (mut a, mut b) = (lo, hi);
    while a < b {
        acc += term(a) + term(b);
        a += 1;
        b -= 1;
    }
    if a == b {
        acc += term(a);
    }
    acc
}

/// Mean and population variance via mirrored-pair accumulation, so both are
/// bit-identical for a series and its reversal.
fn symmetric_mean_var(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = mirrored_pair_sum(0, values.len() - 1, |i| values[i]) / n;
    let var = mirrored_pair_sum(0, values.len() - 1, |i| {
        let d = values[i] - mean;
        d * d
    }) / n;
    (mean, var)
}

/// Raw bicovariance machinery over a standardized sample.
struct Bicov<'a> {
    y: &'a [f64],
    k: usize,
}

impl Bicov<'_> {
    /// gamma_hat, b21, b12. The gamma accumulation pairs the term at t with
    /// the term at (T-1) - (t-k): under time reversal each term maps to the
    /// negated term at its partner, so the sum flips sign exactly and a
    /// palindrome gives exactly zero.
    fn statistics(&self) -> (f64, f64, f64) {
        let t_len = self.y.len();
        let k = self.k;
        let denom = (t_len - k) as f64;
        let gamma = mirrored_pair_sum(k, t_len - 1, |t| {
            let a = self.y[t];
            let b = self.y[t - k];
            a * b * (a - b)
        }) / denom;
        let b21 = mirrored_pair_sum(k, t_len - 1, |t| {
            self.y[t] * self.y[t] * self.y[t - k]
        }) / denom;
        let b12 = mirrored_pair_sum(k, t_len - 1, |t| {
            self.y[t] * self.y[t - k] * self.y[t - k]
        }) / denom;
        (gamma, b21, b12)
    }

    /// Plug-in variance of gamma_hat under an iid null:
    /// (2/(T-k)) (m6 m2 - m3^2) with central sample moments.
    fn iid_plugin_variance(&self) -> f64 {
        let n = self.y.len() as f64;
        let mean = mirrored_pair_sum(0, self.y.len() - 1, |i| self.y[i]) / n;
        let moment = |power: i32| {
            mirrored_pair_sum(0, self.y.len() - 1, |i| (self.y[i] - mean).powi(power)) / n
        };
        let (m2, m3, m6) = (moment(2), moment(3), moment(6));
        2.0 / (self.y.len() - self.k) as f64 * (m6 * m2 - m3 * m3)
    }
}

/// Bicovariance statistic on one circular block-bootstrap resample.
fn bootstrap_gamma<R: Rng + ?Sized>(y: &[f64], k: usize, block: usize, rng: &mut R) -> f64 {
    let t_len = y.len();
    let mut resample = Vec::with_capacity(t_len + block);
    while resample.len() < t_len {
        let start = rng.random_range(0..t_len);
        for j in 0..block {
            resample.push(y[(start + j) % t_len]);
        }
    }
    resample.truncate(t_len);
    let (mean, var) = symmetric_mean_var(&resample);
    if !(var > 0.0) {
        return 0.0;
    }
    let sd = var.sqrt();
    for v in resample.iter_mut() {
        *v = (*v - mean) / sd;
    }
    Bicov { y: &resample, k }.statistics().0
}

/// Bicovariance test for time reversibility at lag `k`.
///
/// The series is demeaned and standardized internally. The null hypothesis
/// is reversibility; the p-value is two-sided normal. `rng` drives bootstrap
/// resampling only and is untouched under [`VarianceMethod::IidPlugin`];
/// callers wanting reproducible reports should pass a derived stream.
pub fn rr_test<R: Rng + ?Sized>(
    series: &TimeSeries,
    k: usize,
    variance_method: VarianceMethod,
    rng: &mut R,
) -> Result<RrReport> {
    if k == 0 {
        return Err(Error::Invalid("bicovariance lag must be positive".to_string()));
    }
    let t_len = series.len();
    if t_len <= k + 10 {
        return Err(Error::TooShort {
            needed: k + 11,
            got: t_len,
        });
    }

    let (mean, var) = symmetric_mean_var(series.values());
    if !(var > 0.0) {
        return Err(Error::Degenerate(
            "bicovariance test needs a nonconstant series".to_string(),
        ));
    }
    let sd = var.sqrt();
    let y: Vec<f64> = series.values().iter().map(|v| (v - mean) / sd).collect();

    let bicov = Bicov { y: &y, k };
    let (gamma_hat, b21, b12) = bicov.statistics();

    let variance_hat = match variance_method {
        VarianceMethod::IidPlugin => bicov.iid_plugin_variance(),
        VarianceMethod::BlockBootstrap => {
            let block = (t_len as f64).cbrt().ceil() as usize;
            let draws: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
                .map(|_| bootstrap_gamma(&y, k, block.max(1), rng))
                .collect();
            let m = draws.iter().sum::<f64>() / draws.len() as f64;
            draws.iter().map(|g| (g - m) * (g - m)).sum::<f64>() / (draws.len() - 1) as f64
        }
    };
    if !(variance_hat > 0.0) || !variance_hat.is_finite() {
        return Err(Error::Degenerate(format!(
            "bicovariance variance estimate is unusable: {variance_hat}"
        )));
    }

    let z_statistic = gamma_hat / variance_hat.sqrt();
    let p_value = chisq_sf(z_statistic * z_statistic, 1)?;
    Ok(RrReport {
        k,
        gamma_hat,
        b21,
        b12,
        variance_hat,
        z_statistic,
        p_value,
        variance_method,
    })
}

/// Options for the composed pipeline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub detrend: bool,
    /// Smoothing penalty; when absent the frequency-based rule is used.
    pub lambda: Option<f64>,
    pub strategy: StrategyKind,
    pub strategy_options: StrategyOptions,
    /// Bicovariance lag (strategy rr).
    pub rr_k: usize,
    pub rr_variance: VarianceMethod,
    /// Seed for bootstrap resampling streams.
    pub rr_seed: u64,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions {
            detrend: false,
            lambda: None,
            strategy: StrategyKind::S2,
            strategy_options: StrategyOptions::default(),
            rr_k: 2,
            rr_variance: VarianceMethod::BlockBootstrap,
            rr_seed: 0,
        }
    }
}

/// What the pipeline decided.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PipelineOutcome {
    Mar(TrVerdict),
    Rr(RrReport),
}

/// Pipeline result: the strategy outcome plus a record of any detrending.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineReport {
    pub detrended: bool,
    pub lambda: Option<f64>,
    pub outcome: PipelineOutcome,
}

impl PipelineReport {
    pub fn is_irreversible(&self, alpha: f64) -> bool {
        match &self.outcome {
            PipelineOutcome::Mar(v) => v.is_irreversible(),
            PipelineOutcome::Rr(r) => r.rejects(alpha),
        }
    }
}

/// Ratio below which the working series is treated as numerically constant
/// relative to the input (a detrended pure trend, for example).
const DEGENERATE_SD_RATIO: f64 = 1e-7;

/// Optionally removes a smooth trend, then dispatches to the chosen
/// strategy. The cycle is demeaned before analysis; strategies demean again
/// internally, which is idempotent.
pub fn run_pipeline(series: &TimeSeries, options: &PipelineOptions) -> Result<PipelineReport> {
    let input_sd = series.variance().sqrt();
    if !(input_sd > 0.0) {
        return Err(Error::Degenerate("input series is constant".to_string()));
    }

    let (working, lambda) = if options.detrend {
        let lambda = match options.lambda {
            Some(l) => l,
            None => hp_lambda(series.frequency(), 4)?,
        };
        let decomposition = hp_decompose(series, lambda)?;
        let cycle = TimeSeries::new(
            decomposition.cycle,
            series.frequency(),
            format!("{} cycle", series.label()),
        )?;
        (cycle, Some(lambda))
    } else {
        (series.clone(), None)
    };

    let working_sd = working.variance().sqrt();
    if !(working_sd > DEGENERATE_SD_RATIO * input_sd) {
        return Err(Error::Degenerate(
            "working series is numerically constant after detrending".to_string(),
        ));
    }
    let working = working.demean();

    let outcome = match options.strategy {
        StrategyKind::S1 => {
            PipelineOutcome::Mar(strategy1_with(&working, &options.strategy_options)?)
        }
        StrategyKind::S2 => {
            PipelineOutcome::Mar(strategy2_with(&working, &options.strategy_options)?)
        }
        StrategyKind::Rr => {
            let mut rng = crate::rng::derive_rng(
                options.rr_seed,
                &[working.len() as u64, options.rr_k as u64],
            );
            PipelineOutcome::Rr(rr_test(
                &working,
                options.rr_k,
                options.rr_variance,
                &mut rng,
            )?)
        }
    };

    Ok(PipelineReport {
        detrended: options.detrend,
        lambda,
        outcome,
    })
}
