//! Desk-scale acceptance checks. Each check returns a [`Verdict`] instead of
//! panicking so that a run reports every criterion, red or green.

use std::time::Instant;

use soa_core::bench::{seconds, time_workload};

pub mod learning;
pub mod pricing;
pub mod properties;

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Verdict {
    pub fn line(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        format!("criterion {:>2} {status} [{}] {} ({:.1} s)", self.id, self.name, self.detail, self.seconds)
    }
}

/// Run one check; errors and panics count as failures.
pub fn judge<F>(id: u32, name: &'static str, check: F) -> Verdict
where
    F: FnOnce() -> Result<(bool, String), String>,
{
    let start = Instant::now();
    let (pass, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(check)) {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => (false, format!("error: {e}")),
        Err(p) => {
            let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
            (false, format!("panic: {}", msg.unwrap_or_default()))
        }
    };
    Verdict { id, name, pass, detail, seconds: start.elapsed().as_secs_f64() }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Per-repetition seconds of a workload after the usual warm-ups.
pub fn timed<F, T>(label: &str, workload: F, repetitions: usize) -> Result<Vec<f64>, String>
where
    F: FnMut() -> T,
{
    time_workload(label, workload, repetitions).map(|t| seconds(&t)).map_err(|e| e.to_string())
}

pub fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}
