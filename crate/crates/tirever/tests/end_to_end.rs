//! Integration tests exercising the public API the way a study would:
//! simulate, persist, reload, detrend, select an order, and decide.

use rand::Rng;
use rand_distr::StandardNormal;
use tirever::{
    derive_rng, hp_decompose, load_csv, mar_simulate, run_pipeline, select_pseudo_causal_order,
    strategy1_with, strategy2_with, ColumnSelector, Frequency, IcKind, MarSpec, PipelineOptions,
    PipelineOutcome, SkewTParams, StrategyKind, StrategyOptions, TimeSeries, Verdict,
};

fn t3() -> SkewTParams {
    SkewTParams::symmetric(3.0, 1.0).unwrap()
}

fn simulate(causal: &[f64], noncausal: &[f64], t_len: usize, seed: u64) -> TimeSeries {
    let spec = MarSpec::new(causal.to_vec(), noncausal.to_vec(), t3()).unwrap();
    let mut rng = derive_rng(seed, &[t_len as u64]);
    mar_simulate(&spec, t_len, 200, &mut rng).unwrap()
}

fn known_order(p: usize) -> StrategyOptions {
    StrategyOptions {
        known_p: Some(p),
        ..StrategyOptions::default()
    }
}

#[test]
fn csv_round_trip_preserves_the_series() {
    let series = simulate(&[0.8], &[0.1], 300, 41);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("series.csv");
    std::fs::write(&path, series.to_csv_string()).unwrap();
    let loaded = load_csv(&path, &ColumnSelector::Name("value".to_string()), Frequency::Unspecified)
        .unwrap();

    assert_eq!(loaded.len(), series.len());
    for (a, b) in loaded.values().iter().zip(series.values()) {
        assert_eq!(a, b, "shortest round-trip formatting must be exact");
    }
}

#[test]
fn both_model_strategies_flag_a_strongly_irreversible_series() {
    let series = simulate(&[0.8], &[0.1], 600, 42);

    let s1 = strategy1_with(&series, &known_order(2)).unwrap();
    let s2 = strategy2_with(&series, &known_order(2)).unwrap();

    assert_eq!(s1.verdict, Verdict::Irreversible, "{s1:?}");
    assert_eq!(s2.verdict, Verdict::Irreversible, "{s2:?}");
    assert_eq!(s2.p_selected, 2);
    assert!(s2.decisive_p_value.unwrap() < 0.01, "{s2:?}");
    // The winning model should put the dominant root on the causal side.
    let best = &s2.fits[0];
    assert_eq!((best.r(), best.s()), (1, 1));
    assert!(best.spec.causal[0] > best.spec.noncausal[0]);
}

#[test]
fn a_reversible_series_is_not_flagged() {
    let series = simulate(&[0.8], &[0.8], 600, 43);

    let s1 = strategy1_with(&series, &known_order(2)).unwrap();
    let s2 = strategy2_with(&series, &known_order(2)).unwrap();

    assert_eq!(s1.verdict, Verdict::Reversible, "{s1:?}");
    assert_eq!(s2.verdict, Verdict::Reversible, "{s2:?}");
}

#[test]
fn a_gaussian_series_is_settled_by_the_residual_screen() {
    // Gaussian AR(1): reversibility follows from normal residuals alone, so
    // the strategies must stop at the screen instead of fitting any model.
    let mut rng = derive_rng(44, &[600]);
    let mut y = vec![0.0f64; 600];
    for t in 1..y.len() {
        let shock: f64 = rng.sample(StandardNormal);
        y[t] = 0.7 * y[t - 1] + shock;
    }
    let series = TimeSeries::new(y, Frequency::Unspecified, "gaussian ar1").unwrap();

    let verdict = strategy2_with(&series, &StrategyOptions::default()).unwrap();
    assert_eq!(verdict.verdict, Verdict::ReversibleGaussian, "{verdict:?}");
    assert!(verdict.fits.is_empty(), "no model should have been fitted");
    assert!(verdict.normality.p_value >= 0.05, "{:?}", verdict.normality);
}

#[test]
fn order_selection_recovers_the_pseudo_causal_order() {
    // An irreversible MAR(1,1) admits a pseudo-causal AR(2) representation,
    // so least-squares selection over lag depth should settle on 2.
    let series = simulate(&[0.8], &[0.1], 800, 45);
    let selection = select_pseudo_causal_order(&series, 12, IcKind::Bic).unwrap();
    assert_eq!(selection.p, 2, "selected order");
    assert!(!selection.residuals.is_empty());
}

#[test]
fn detrending_exposes_the_cycle_inside_a_trended_series() {
    // A purely causal cycle (irreversible by construction) buried under a
    // drifting random walk: the pipeline must remove the trend and still
    // flag the cycle, and the decomposition must reconstruct the input.
    let cycle = simulate(&[0.8], &[], 500, 46);
    let mut rng = derive_rng(46, &[500, 99]);
    let mut level = 0.0f64;
    let observed: Vec<f64> = cycle
        .values()
        .iter()
        .map(|c| {
            let shock: f64 = rng.sample(StandardNormal);
            level += 0.05 + shock;
            level + c
        })
        .collect();
    let series = TimeSeries::new(observed, Frequency::Unspecified, "trended").unwrap();

    let decomposition = hp_decompose(&series, 1600.0).unwrap();
    for ((y, t), c) in series
        .values()
        .iter()
        .zip(&decomposition.trend)
        .zip(&decomposition.cycle)
    {
        assert!((y - (t + c)).abs() < 1e-10, "decomposition must add back up");
    }

    let options = PipelineOptions {
        detrend: true,
        lambda: Some(1600.0),
        strategy: StrategyKind::S2,
        strategy_options: known_order(2),
        ..PipelineOptions::default()
    };
    let report = run_pipeline(&series, &options).unwrap();
    assert!(report.detrended);
    assert_eq!(report.lambda, Some(1600.0));
    match &report.outcome {
        PipelineOutcome::Mar(v) => assert_eq!(v.verdict, Verdict::Irreversible, "{v:?}"),
        PipelineOutcome::Rr(_) => unreachable!("a model strategy was requested"),
    }
}

#[test]
fn bicovariance_path_returns_a_complete_report() {
    let series = simulate(&[0.8], &[0.5], 400, 47);
    let options = PipelineOptions {
        strategy: StrategyKind::Rr,
        ..PipelineOptions::default()
    };
    let report = run_pipeline(&series, &options).unwrap();
    match &report.outcome {
        PipelineOutcome::Rr(r) => {
            assert_eq!(r.k, 2);
            assert!(r.variance_hat > 0.0, "{r:?}");
            assert!(r.z_statistic.is_finite(), "{r:?}");
            assert!((0.0..=1.0).contains(&r.p_value), "{r:?}");
        }
        PipelineOutcome::Mar(_) => unreachable!("the bicovariance path was requested"),
    }
}
