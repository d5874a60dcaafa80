//! Replication engine: simulate a data-generating process, run a detection
//! strategy, and tabulate how often irreversibility is flagged.
//!
//! Determinism contract: replication i of a cell draws everything it needs
//! from the stream derived as (master_seed, [T, strategy, i]). Cells
//! aggregate by counting, so results are identical for any execution order
//! or worker count.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hp::hp_decompose;
use crate::mar::{mar_simulate, IcKind, MarSpec, DEFAULT_BURN_IN};
use crate::rng::derive_rng;
use crate::series::TimeSeries;
use crate::strategies::{
    rr_test, strategy1_with, strategy2_with, StrategyKind, StrategyOptions, VarianceMethod,
};

/// Deterministic trend added on top of the stationary process.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrendOverlay {
    #[default]
    None,
    /// Random walk with drift: x_t = x_{t-1} + delta + noise_sd * eta_t with
    /// standard normal eta. The observed series is x_t plus the cycle.
    RandomWalkDrift {
        #[serde(default = "default_delta")]
        delta: f64,
        #[serde(default = "default_noise_sd")]
        noise_sd: f64,
    },
}

fn default_delta() -> f64 {
    0.05
}

fn default_noise_sd() -> f64 {
    1.0
}

fn default_alpha() -> f64 {
    0.05
}

fn default_rr_k() -> usize {
    2
}

fn default_rr_variance() -> VarianceMethod {
    VarianceMethod::BlockBootstrap
}

fn default_burn_in() -> usize {
    DEFAULT_BURN_IN
}

/// Full experiment description. Unknown fields are rejected when read from
/// JSON so configuration typos surface immediately.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    /// Cycle process.
    pub dgp: MarSpec,
    #[serde(default)]
    pub trend: TrendOverlay,
    pub t_list: Vec<usize>,
    pub n_reps: usize,
    pub strategies: Vec<StrategyKind>,
    /// Hand the true total order (rounded up to even) to the strategies
    /// instead of running order selection.
    #[serde(default)]
    pub p_known: bool,
    /// Smoothing penalty applied to every simulated draw before analysis;
    /// required when a trend overlay is present.
    #[serde(default)]
    pub detrend_lambda: Option<f64>,
    pub master_seed: u64,
    /// Test size for the likelihood-ratio and bicovariance decisions.
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default)]
    pub criterion: IcKind,
    #[serde(default = "default_rr_k")]
    pub rr_k: usize,
    #[serde(default = "default_rr_variance")]
    pub rr_variance: VarianceMethod,
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
}

impl McConfig {
    pub fn validate(&self) -> Result<()> {
        self.dgp.validate()?;
        if self.t_list.is_empty() {
            return Err(Error::Config("t_list must not be empty".to_string()));
        }
        if self.n_reps == 0 {
            return Err(Error::Config("n_reps must be at least 1".to_string()));
        }
        if self.strategies.is_empty() {
            return Err(Error::Config("at least one strategy is required".to_string()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        if self.rr_k == 0 {
            return Err(Error::Config("rr_k must be positive".to_string()));
        }
        if let TrendOverlay::RandomWalkDrift { delta, noise_sd } = self.trend {
            if !delta.is_finite() || !noise_sd.is_finite() || noise_sd < 0.0 {
                return Err(Error::Config(format!(
                    "trend overlay needs finite delta and nonnegative noise_sd, got {delta}, {noise_sd}"
                )));
            }
            if self.detrend_lambda.is_none() {
                return Err(Error::Config(
                    "a trend overlay requires detrend_lambda".to_string(),
                ));
            }
        }
        if let Some(lambda) = self.detrend_lambda {
            if !(lambda > 0.0) || !lambda.is_finite() {
                return Err(Error::Config(format!(
                    "detrend_lambda must be positive and finite, got {lambda}"
                )));
            }
        }
        if self.p_known
            && self.dgp.order() == 0
            && self
                .strategies
                .iter()
                .any(|s| matches!(s, StrategyKind::S1 | StrategyKind::S2))
        {
            return Err(Error::Config(
                "p_known needs a dgp with at least one autoregressive coefficient".to_string(),
            ));
        }
        Ok(())
    }

    fn strategy_options(&self) -> StrategyOptions {
        let known_p = if self.p_known {
            // Round the true total order up to even so the grid always
            // contains the palindromic candidate.
            let p = self.dgp.order();
            Some(if p % 2 == 1 { p + 1 } else { p })
        } else {
            None
        };
        StrategyOptions {
            criterion: self.criterion,
            alpha: self.alpha,
            known_p,
            ..StrategyOptions::default()
        }
    }
}

/// One table cell: detection frequency for a (sample size, strategy) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McCell {
    pub t_len: usize,
    pub strategy: StrategyKind,
    pub n_reps: usize,
    /// Replications that finished without error.
    pub completed: usize,
    pub failures: usize,
    /// Irreversible verdicts (or bicovariance rejections) among completed
    /// replications.
    pub rejections: usize,
    /// rejections / completed; NaN when nothing completed.
    pub frequency: f64,
}

/// Strategy tag for stream derivation. Part of the reproducibility contract:
/// changing these values changes every simulated draw.
fn stream_tag(strategy: StrategyKind) -> u64 {
    match strategy {
        StrategyKind::S1 => 1,
        StrategyKind::S2 => 2,
        StrategyKind::Rr => 3,
    }
}

/// Runs one replication; `Ok(true)` means irreversibility was flagged.
fn one_rep(config: &McConfig, t_len: usize, strategy: StrategyKind, rep: usize) -> Result<bool> {
    let mut rng = derive_rng(
        config.master_seed,
        &[t_len as u64, stream_tag(strategy), rep as u64],
    );
    let cycle = mar_simulate(&config.dgp, t_len, config.burn_in, &mut rng)?;

    let observed = match config.trend {
        TrendOverlay::None => cycle,
        TrendOverlay::RandomWalkDrift { delta, noise_sd } => {
            let noise = Normal::new(0.0, noise_sd)
                .map_err(|e| Error::Config(format!("trend noise: {e}")))?;
            let mut level = 0.0;
            let values: Vec<f64> = cycle
                .values()
                .iter()
                .map(|c| {
                    level += delta + noise.sample(&mut rng);
                    level + c
                })
                .collect();
            TimeSeries::new(values, cycle.frequency(), "mar with trend")?
        }
    };

    let working = match config.detrend_lambda {
        Some(lambda) => {
            let decomposition = hp_decompose(&observed, lambda)?;
            TimeSeries::new(decomposition.cycle, observed.frequency(), "cycle")?
        }
        None => observed,
    };

    match strategy {
        StrategyKind::S1 => {
            Ok(strategy1_with(&working, &config.strategy_options())?.is_irreversible())
        }
        StrategyKind::S2 => {
            Ok(strategy2_with(&working, &config.strategy_options())?.is_irreversible())
        }
        StrategyKind::Rr => {
            let report = rr_test(&working, config.rr_k, config.rr_variance, &mut rng)?;
            Ok(report.p_value < config.alpha)
        }
    }
}

/// Maps replication indices 1..=n through `work`, in parallel when the
/// `parallel` feature is enabled. The output is index-ordered either way;
/// callers aggregate by counting, so scheduling cannot affect results.
#[cfg(feature = "parallel")]
fn map_reps<F>(n: usize, work: F) -> Vec<Option<bool>>
where
    F: Fn(usize) -> Option<bool> + Sync + Send,
{
    use rayon::prelude::*;
    (1..=n).into_par_iter().map(work).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_reps<F>(n: usize, work: F) -> Vec<Option<bool>>
where
    F: Fn(usize) -> Option<bool> + Sync + Send,
{
    (1..=n).map(work).collect()
}

/// Runs every replication of one (sample size, strategy) cell.
pub fn run_cell(config: &McConfig, t_len: usize, strategy: StrategyKind) -> Result<McCell> {
    config.validate()?;
    let outcomes = map_reps(config.n_reps, |rep| {
        one_rep(config, t_len, strategy, rep).ok()
    });
    let completed = outcomes.iter().filter(|o| o.is_some()).count();
    let rejections = outcomes.iter().filter(|o| **o == Some(true)).count();
    Ok(McCell {
        t_len,
        strategy,
        n_reps: config.n_reps,
        completed,
        failures: config.n_reps - completed,
        rejections,
        frequency: rejections as f64 / completed as f64,
    })
}

/// Runs the full cross product of sample sizes and strategies, sample sizes
/// outermost.
pub fn run_table(config: &McConfig) -> Result<Vec<McCell>> {
    config.validate()?;
    let mut cells = Vec::with_capacity(config.t_list.len() * config.strategies.len());
    for &t_len in &config.t_list {
        for &strategy in &config.strategies {
            cells.push(run_cell(config, t_len, strategy)?);
        }
    }
    Ok(cells)
}
