//! Jarque-Bera normality check for regression residuals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::chisq_sf;

/// Minimum residual count for a meaningful third/fourth moment.
pub const JB_MIN_SAMPLE: usize = 8;

/// Outcome of the Jarque-Bera test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalityReport {
    pub statistic: f64,
    pub p_value: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    pub sample_size: usize,
}

/// Jarque-Bera test with biased (1/n) central moments and the chi-square(2)
/// reference distribution: statistic = n/6 (S^2 + (K-3)^2 / 4).
pub fn jarque_bera(residuals: &[f64]) -> Result<NormalityReport> {
    let n = residuals.len();
    if n < JB_MIN_SAMPLE {
        return Err(Error::TooShort {
            needed: JB_MIN_SAMPLE,
            got: n,
        });
    }
    let nf = n as f64;
    let mean = residuals.iter().sum::<f64>() / nf;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    let mut m4 = 0.0;
    for &x in residuals {
        let d = x - mean;
        let d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    m2 /= nf;
    m3 /= nf;
    m4 /= nf;

    let scale = residuals.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
    if m2 <= 1e-24 * scale * scale {
        return Err(Error::Degenerate(
            "zero variance: normality test undefined".to_string(),
        ));
    }

    let skewness = m3 / m2.powf(1.5);
    let kurtosis = m4 / (m2 * m2);
    let statistic = nf / 6.0 * (skewness * skewness + (kurtosis - 3.0).powi(2) / 4.0);
    let p_value = chisq_sf(statistic, 2)?;
    Ok(NormalityReport {
        statistic,
        p_value,
        skewness,
        excess_kurtosis: kurtosis - 3.0,
        sample_size: n,
    })
}
