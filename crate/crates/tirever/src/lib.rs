//! tirever: deciding whether a univariate time series is time-reversible.
//!
//! The crate fits mixed causal-noncausal autoregressions (MAR) with Student-t
//! innovations and decides reversibility two ways: model selection over the
//! (r, s) grid against a palindromic restricted model (strategy 1), and a
//! likelihood-ratio test of that restriction (strategy 2). A bicovariance
//! portmanteau test is included as the classical baseline, a Hodrick-Prescott
//! filter as the detrending front end, and a deterministic Monte Carlo
//! harness measures detection frequencies across sample sizes.
//!
//! Replication-level parallelism runs on rayon when the `parallel` feature
//! (default) is enabled; results are identical for any worker count because
//! every replication derives its own random stream.

// Guards are written `!(x > 0.0)` on purpose throughout: the negation also
// rejects NaN, which `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hp;
pub mod mar;
pub mod montecarlo;
pub mod normality;
pub mod optim;
pub mod rng;
pub mod series;
pub mod skewt;
pub mod special;
pub mod strategies;

pub use error::{Error, Result};
pub use hp::{hp_decompose, hp_factorization_check, hp_lambda, hp_psi, hp_weights, HpDecomposition, HpWeights};
pub use mar::{
    mar_fit, mar_grid, mar_loglik, mar_residuals, mar_simulate, mar_simulate_from_noise, IcKind,
    MarFit, MarSpec, DEFAULT_BURN_IN,
};
pub use montecarlo::{run_cell, run_table, McCell, McConfig, TrendOverlay};
pub use normality::{jarque_bera, NormalityReport};
pub use rng::derive_rng;
pub use series::{load_csv, ColumnSelector, Frequency, TimeSeries};
pub use skewt::SkewTParams;
pub use special::chisq_sf;
pub use strategies::{
    rr_test, run_pipeline, select_pseudo_causal_order, strategy1, strategy1_with, strategy2,
    strategy2_with, OrderSelection, PipelineOptions, PipelineOutcome, PipelineReport, RrReport,
    StrategyKind, StrategyOptions, TrVerdict, VarianceMethod, Verdict,
};
