//! Grid search for the smallest `(B, N)` meeting a mean relative-error target.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::mc::{mc_price, McConfig};
use crate::models::ModelSpec;
use crate::offsets::{OffsetKind, OptionKind, OptionSpec};
use crate::quad::{closed_form_bs, normalized_quadrature, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunerGrid {
    pub b_min: f64,
    pub b_max: f64,
    pub db: f64,
    pub iota_min: f64,
    pub iota_max: f64,
    pub diota: f64,
    /// Threshold on the mean relative error, in basis points.
    pub e_th_bps: f64,
}

impl Default for TunerGrid {
    fn default() -> Self {
        TunerGrid { b_min: 10.0, b_max: 2000.0, db: 10.0, iota_min: 0.1, iota_max: 5.0, diota: 0.1, e_th_bps: 2.0 }
    }
}

fn steps(lo: f64, hi: f64, d: f64) -> Vec<f64> {
    let count = ((hi - lo) / d + 1e-9).floor() as usize + 1;
    (0..count).map(|i| lo + i as f64 * d).collect()
}

impl TunerGrid {
    pub fn validate(&self) -> Result<()> {
        let ok = self.db > 0.0
            && self.b_min >= self.db
            && self.b_max >= self.b_min
            && self.iota_min > 0.0
            && self.diota > 0.0
            && self.iota_max >= self.iota_min
            && self.e_th_bps >= 0.0;
        if ok {
            Ok(())
        } else {
            Err(PricingError::InvalidArgument(format!("malformed tuner grid {self:?}")))
        }
    }

    pub fn b_values(&self) -> Vec<f64> {
        steps(self.b_min, self.b_max, self.db)
    }

    pub fn iota_values(&self) -> Vec<f64> {
        steps(self.iota_min, self.iota_max, self.diota)
    }
}

/// `N = ⌊ιB⌋`, rounded down to an even count.
pub fn node_count(b: f64, iota: f64) -> usize {
    let n = (iota * b + 1e-9).floor() as usize;
    n - n % 2
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum BenchmarkSource {
    ClosedForm,
    MonteCarlo { paths: usize, seed: u64, std_error: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerCase {
    pub label: String,
    pub option: OptionSpec,
    pub model: ModelSpec,
    /// Benchmark price in currency units.
    pub benchmark: f64,
    pub source: BenchmarkSource,
}

/// The reference contract (s0 = 150, K = 100, three months, 2%).
pub fn reference_option(kind: OptionKind) -> OptionSpec {
    OptionSpec::new(kind, 150.0, 100.0, 0.25, 0.02)
}

pub fn reference_models() -> [(&'static str, ModelSpec); 3] {
    [
        ("gbm", ModelSpec::Gbm { sigma: 0.25 }),
        ("heston", ModelSpec::Heston { kappa: 2.30, theta: 0.36, sigma: 0.10, rho: 0.60, v0: 0.49 }),
        ("evgp", ModelSpec::Evgp { theta: 0.10, sigma: 0.20, nu: 0.30 }),
    ]
}

/// The six option/model cases with closed-form GBM and Monte Carlo benchmarks.
pub fn reference_cases(mc: &McConfig) -> Result<Vec<TunerCase>> {
    let mut cases = Vec::with_capacity(6);
    for (name, model) in reference_models() {
        for kind in [OptionKind::European, OptionKind::Digital] {
            let option = reference_option(kind);
            let (benchmark, source) = match model {
                ModelSpec::Gbm { sigma } => (closed_form_bs(&option, sigma), BenchmarkSource::ClosedForm),
                _ => {
                    let r = mc_price(&option, &model, mc)?;
                    (r.price, BenchmarkSource::MonteCarlo { paths: r.paths, seed: r.seed, std_error: r.std_error })
                }
            };
            cases.push(TunerCase { label: format!("{name}-{}", kind.as_str()), option, model, benchmark, source });
        }
    }
    Ok(cases)
}

/// Relative errors `|V_n / V_b - 1|` per case, from unclamped quadrature values.
pub fn case_errors(cfg: &QuadratureConfig, cases: &[TunerCase]) -> Result<Vec<f64>> {
    cases
        .iter()
        .map(|c| {
            if c.benchmark == 0.0 || !c.benchmark.is_finite() {
                return Err(PricingError::DivisionGuard { case: c.label.clone(), value: c.benchmark });
            }
            let v = normalized_quadrature(&c.option, &c.model, cfg)? * c.option.scale();
            Ok((v / c.benchmark - 1.0).abs())
        })
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub b: f64,
    pub iota: f64,
    pub n: usize,
    pub mean_error_bps: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TunerReport {
    pub offset: OffsetKind,
    pub b: f64,
    pub iota: f64,
    pub n: usize,
    pub mean_error_bps: f64,
    pub case_errors_bps: Vec<(String, f64)>,
    pub benchmarks: Vec<(String, f64, BenchmarkSource)>,
    pub grid: TunerGrid,
    /// Every configuration evaluated, in scan order, ending at the selected one.
    pub trace: Vec<TraceRow>,
}

impl TunerReport {
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("b,iota,n,mean_error_bps,pass\n");
        for r in &self.trace {
            out.push_str(&format!("{:.16e},{:.16e},{},{:.16e},{}\n", r.b, r.iota, r.n, r.mean_error_bps, r.pass));
        }
        out
    }
}

fn mean_error_bps(cfg: &QuadratureConfig, cases: &[TunerCase]) -> Result<f64> {
    match case_errors(cfg, cases) {
        Ok(e) => Ok(1e4 * mean(&e)),
        Err(e) if e.is_numeric() => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Scan `B` ascending (outer) and `ι` ascending (inner); return the first
/// configuration whose mean error is within the threshold.
pub fn tune(offset: OffsetKind, grid: &TunerGrid, cases: &[TunerCase]) -> Result<TunerReport> {
    grid.validate()?;
    if cases.is_empty() {
        return Err(PricingError::InvalidArgument("tuner needs at least one case".into()));
    }
    let iotas = grid.iota_values();
    let mut trace = Vec::new();
    let mut best: Option<TraceRow> = None;
    for b in grid.b_values() {
        let row: Vec<TraceRow> = iotas
            .par_iter()
            .filter_map(|&iota| {
                let n = node_count(b, iota);
                (n >= 2).then_some((iota, n))
            })
            .map(|(iota, n)| {
                let e = mean_error_bps(&QuadratureConfig::new(offset, b, n), cases)?;
                Ok(TraceRow { b, iota, n, mean_error_bps: e, pass: e <= grid.e_th_bps })
            })
            .collect::<Result<_>>()?;
        for r in row {
            trace.push(r);
            if best.is_none_or(|bst| r.mean_error_bps < bst.mean_error_bps) {
                best = Some(r);
            }
            if r.pass {
                let cfg = QuadratureConfig::new(offset, r.b, r.n);
                let errs = case_errors(&cfg, cases)?;
                return Ok(TunerReport {
                    offset,
                    b: r.b,
                    iota: r.iota,
                    n: r.n,
                    mean_error_bps: r.mean_error_bps,
                    case_errors_bps: cases.iter().zip(&errs).map(|(c, e)| (c.label.clone(), 1e4 * e)).collect(),
                    benchmarks: cases.iter().map(|c| (c.label.clone(), c.benchmark, c.source)).collect(),
                    grid: *grid,
                    trace,
                });
            }
        }
    }
    let best = best.unwrap_or(TraceRow { b: grid.b_min, iota: grid.iota_min, n: 0, mean_error_bps: f64::INFINITY, pass: false });
    Err(PricingError::ExhaustedGrid { best_bps: best.mean_error_bps, best_b: best.b, best_n: best.n })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gbm_cases() -> Vec<TunerCase> {
        let model = ModelSpec::Gbm { sigma: 0.25 };
        [OptionKind::European, OptionKind::Digital]
            .into_iter()
            .map(|kind| {
                let option = reference_option(kind);
                TunerCase {
                    label: kind.as_str().into(),
                    option,
                    model,
                    benchmark: closed_form_bs(&option, 0.25),
                    source: BenchmarkSource::ClosedForm,
                }
            })
            .collect()
    }

    #[test]
    fn node_counts_are_even() {
        assert_eq!(node_count(40.0, 1.6), 64);
        assert_eq!(node_count(360.0, 1.6), 576);
        assert_eq!(node_count(10.0, 0.1), 0);
        assert_eq!(node_count(10.0, 0.3), 2);
        assert_eq!(node_count(30.0, 0.1 + 0.1 * 4.0), 14);
    }

    #[test]
    fn reference_grid_sizes() {
        let g = TunerGrid::default();
        assert_eq!(g.b_values().len(), 200);
        assert_eq!(g.iota_values().len(), 50);
        assert!((g.iota_values()[15] - 1.6).abs() < 1e-12);
    }

    #[test]
    fn exact_prices_have_zero_error() {
        let mut cases = gbm_cases();
        let cfg = QuadratureConfig::soa_tuned();
        for c in &mut cases {
            c.benchmark = normalized_quadrature(&c.option, &c.model, &cfg).unwrap() * c.option.scale();
        }
        assert!(mean(&case_errors(&cfg, &cases).unwrap()) < 1e-15);
    }

    #[test]
    fn zero_benchmark_is_guarded() {
        let mut cases = gbm_cases();
        cases[1].benchmark = 0.0;
        assert!(matches!(
            case_errors(&QuadratureConfig::soa_tuned(), &cases),
            Err(PricingError::DivisionGuard { .. })
        ));
    }

    #[test]
    fn vacuous_threshold_returns_first_cell() {
        let grid = TunerGrid { e_th_bps: 1e6, ..TunerGrid::default() };
        let r = tune(OffsetKind::Smooth, &grid, &gbm_cases()).unwrap();
        assert_eq!((r.b, r.n), (10.0, 2));
        assert_eq!(r.trace.len(), 1);
    }

    #[test]
    fn previous_cell_fails() {
        let r = tune(OffsetKind::Smooth, &TunerGrid::default(), &gbm_cases()).unwrap();
        assert!(r.mean_error_bps <= 2.0);
        let n = r.trace.len();
        assert!(n >= 2 && !r.trace[n - 2].pass);
    }

    #[test]
    fn exhausted_grid_reports_best() {
        let grid = TunerGrid { b_max: 20.0, iota_max: 0.5, e_th_bps: 0.0, ..TunerGrid::default() };
        match tune(OffsetKind::CarrMadan, &grid, &gbm_cases()) {
            Err(PricingError::ExhaustedGrid { best_bps, .. }) => assert!(best_bps > 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }
}
