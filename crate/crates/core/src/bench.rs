//! Error metrics, wall-clock timing and through-origin regression.

use std::time::Instant;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{PricingError, Result};

/// Actual values below this are left out of the relative-error mean.
pub const RELATIVE_FLOOR: f64 = 1e-4;
pub const WARMUPS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorMetrics {
    /// Root-mean-square error over all records.
    pub absolute: f64,
    /// Mean of `|ŷ/y - 1|` over records with `y >= RELATIVE_FLOOR`.
    pub relative: f64,
    pub n: usize,
    pub n_relative: usize,
}

impl ErrorMetrics {
    pub fn relative_bps(&self) -> f64 {
        1e4 * self.relative
    }
}

pub fn abs_rel_errors(predicted: &[f64], actual: &[f64]) -> Result<ErrorMetrics> {
    if predicted.len() != actual.len() {
        return Err(PricingError::InvalidArgument(format!(
            "length mismatch: {} predictions, {} actuals",
            predicted.len(),
            actual.len()
        )));
    }
    if predicted.is_empty() {
        return Err(PricingError::InvalidArgument("error metrics need at least one record".into()));
    }
    let n = predicted.len();
    let sq: f64 = predicted.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).sum();
    let (rel_sum, n_rel) = predicted
        .iter()
        .zip(actual)
        .filter(|(_, a)| **a >= RELATIVE_FLOOR)
        .fold((0.0, 0usize), |(s, c), (p, a)| (s + (p / a - 1.0).abs(), c + 1));
    Ok(ErrorMetrics {
        absolute: (sq / n as f64).sqrt(),
        relative: if n_rel > 0 { rel_sum / n_rel as f64 } else { f64::NAN },
        n,
        n_relative: n_rel,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginRegressionResult {
    pub beta: f64,
    pub std_error: f64,
    pub t_stat: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
    /// Residuals vanish, so the standard error is zero and `t` is not informative.
    pub degenerate: bool,
}

/// Least squares `y = βx` without intercept, inference on `n - 1` degrees of freedom.
pub fn ols_origin(x: &[f64], y: &[f64]) -> Result<OriginRegressionResult> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(PricingError::InvalidArgument(format!(
            "regression needs two equal-length series with n >= 2, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    let sxx: f64 = x.iter().map(|v| v * v).sum();
    if !(sxx > 0.0) || !sxx.is_finite() {
        return Err(PricingError::InvalidArgument("regressor is identically zero".into()));
    }
    let n = x.len();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let beta = sxy / sxx;
    let rss: f64 = x.iter().zip(y).map(|(a, b)| (b - beta * a).powi(2)).sum();
    let df = (n - 1) as f64;
    let se = (rss / df / sxx).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).map_err(|e| PricingError::InvalidArgument(e.to_string()))?;
    if se == 0.0 {
        let t_stat = if beta == 0.0 { 0.0 } else { f64::INFINITY.copysign(beta) };
        let p_value = if beta == 0.0 { 1.0 } else { 0.0 };
        return Ok(OriginRegressionResult { beta, std_error: 0.0, t_stat, p_value, ci_low: beta, ci_high: beta, n, degenerate: true });
    }
    let t_stat = beta / se;
    let p_value = 2.0 * dist.sf(t_stat.abs());
    let q = dist.inverse_cdf(0.975);
    Ok(OriginRegressionResult {
        beta,
        std_error: se,
        t_stat,
        p_value,
        ci_low: beta - q * se,
        ci_high: beta + q * se,
        n,
        degenerate: false,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingSample {
    pub label: String,
    pub seconds: f64,
    pub repetition: usize,
    pub machine: String,
}

pub fn machine_fingerprint() -> String {
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    format!("{}-{}-{}t", std::env::consts::OS, std::env::consts::ARCH, threads)
}

/// Time `repetitions` runs of `workload` after `WARMUPS` discarded runs.
pub fn time_workload<F, T>(label: &str, mut workload: F, repetitions: usize) -> Result<Vec<TimingSample>>
where
    F: FnMut() -> T,
{
    if repetitions == 0 {
        return Err(PricingError::InvalidArgument("at least one repetition is required".into()));
    }
    for _ in 0..WARMUPS {
        std::hint::black_box(workload());
    }
    let machine = machine_fingerprint();
    Ok((0..repetitions)
        .map(|repetition| {
            let start = Instant::now();
            std::hint::black_box(workload());
            // clock resolution floor keeps samples strictly positive
            let seconds = start.elapsed().as_secs_f64().max(1e-9);
            TimingSample { label: label.to_string(), seconds, repetition, machine: machine.clone() }
        })
        .collect())
}

pub fn seconds(samples: &[TimingSample]) -> Vec<f64> {
    samples.iter().map(|s| s.seconds).collect()
}

pub fn timing_csv(samples: &[TimingSample]) -> String {
    let mut out = String::from("label,repetition,seconds,machine\n");
    for s in samples {
        out.push_str(&format!("{},{},{:.16e},{}\n", s.label, s.repetition, s.seconds, s.machine));
    }
    out
}
