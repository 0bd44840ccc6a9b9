//! Small statistical helpers: the one-sample Kolmogorov–Smirnov test used to
//! validate samplers against closed-form laws.

use crate::error::{Error, Result};
use serde::Serialize;

/// Outcome of a one-sample KS test at the fixed 1% level.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct KsResult {
    /// Supremum distance between the empirical CDF and the reference CDF.
    pub statistic: f64,
    /// `1.63 / √n`, the asymptotic 1% critical value.
    pub critical_value: f64,
    pub n: usize,
    /// True when the sample is compatible with the reference distribution.
    pub pass: bool,
}

/// One-sample KS statistic against `cdf`. Sorts the slice in place.
pub fn ks_statistic<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InsufficientSamples { got: 0, need: 1 });
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        let above = (i as f64 + 1.0) / n - f;
        let below = f - i as f64 / n;
        d = d.max(above).max(below);
    }
    Ok(d)
}

/// One-sample KS test at the 1% level with the `1.63/√n` critical value.
pub fn ks_test<F: Fn(f64) -> f64>(samples: &mut [f64], cdf: F) -> Result<KsResult> {
    let n = samples.len();
    if n < 10 {
        return Err(Error::InsufficientSamples { got: n, need: 10 });
    }
    let statistic = ks_statistic(samples, cdf)?;
    let critical_value = 1.63 / (n as f64).sqrt();
    Ok(KsResult {
        statistic,
        critical_value,
        n,
        pass: statistic < critical_value,
    })
}
