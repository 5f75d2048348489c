//! Strike-ladder pricing with one discrete Fourier transform.
//!
//! With `Δz = B/(N-1)` and `Δk = 2π/(NΔz)` the phases `e^{-i z_j k_n}` factor
//! into `e^{-i j Δz k̲}` times the DFT kernel, so all `N` log-strike nodes are
//! priced together. Ladder prices are linear interpolations of node prices.

use std::cell::RefCell;
use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::models::{MarketSpec, ModelSpec};
use crate::offsets::{offset_value, zero_node_shift, Eta, OffsetKind, OptionKind};

/// Normalized prices below this level are flagged as unreliable.
pub const OTM_FLAG_LEVEL: f64 = 0.05;

/// Options differing only in strike.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrikeLadder {
    pub kind: OptionKind,
    pub market: MarketSpec,
    pub strikes: Vec<f64>,
}

impl StrikeLadder {
    pub fn new(kind: OptionKind, s0: f64, r: f64, t: f64, strikes: Vec<f64>) -> Self {
        StrikeLadder { kind, market: MarketSpec::new(s0, r, t), strikes }
    }

    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        if self.strikes.is_empty() {
            return Err(PricingError::InvalidArgument("strike ladder is empty".into()));
        }
        if let Some(k) = self.strikes.iter().find(|k| !k.is_finite() || **k <= 0.0) {
            return Err(PricingError::Domain(format!("strikes must be finite and positive, got {k}")));
        }
        Ok(())
    }

    pub fn log_strikes(&self) -> Vec<f64> {
        self.strikes.iter().map(|k| (k / self.market.s0).ln()).collect()
    }

    fn bounds(&self) -> (f64, f64) {
        self.log_strikes().iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &k| (lo.min(k), hi.max(k)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FftGrid {
    pub b: f64,
    /// Node count.
    pub n: usize,
    pub dz: f64,
    pub dk: f64,
    /// Lowest log-strike node.
    pub k_lo: f64,
    pub k_min: f64,
    pub k_max: f64,
}

impl FftGrid {
    pub fn z(&self, j: usize) -> f64 {
        j as f64 * self.dz
    }

    pub fn k(&self, i: usize) -> f64 {
        self.k_lo + i as f64 * self.dk
    }

    pub fn k_hi(&self) -> f64 {
        self.k(self.n - 1)
    }
}

fn span(b: f64, n: usize) -> f64 {
    let m = n as f64;
    (m - 1.0) * (m - 1.0) / m * (2.0 * PI / b)
}

fn min_nodes(b: f64, width: f64) -> usize {
    let mut n = 2;
    while span(b, n) <= width {
        n += 1;
    }
    n
}

/// Grid with `k̲` placed so the ladder sits symmetrically inside the node range.
pub fn build_grid(ladder: &StrikeLadder, b: f64, n: usize) -> Result<FftGrid> {
    build_grid_inner(ladder, b, n, None)
}

/// As [`build_grid`] but with a caller-chosen lowest node `k̲`.
pub fn build_grid_with_lower(ladder: &StrikeLadder, b: f64, n: usize, k_lo: f64) -> Result<FftGrid> {
    build_grid_inner(ladder, b, n, Some(k_lo))
}

fn build_grid_inner(ladder: &StrikeLadder, b: f64, n: usize, k_lo: Option<f64>) -> Result<FftGrid> {
    ladder.validate()?;
    if !b.is_finite() || b <= 0.0 {
        return Err(PricingError::InvalidArgument(format!("truncation point must be > 0, got {b}")));
    }
    if n < 2 {
        return Err(PricingError::InvalidArgument(format!("FFT grid needs at least 2 nodes, got {n}")));
    }
    let (k_min, k_max) = ladder.bounds();
    let width = k_max - k_min;
    let s = span(b, n);
    if s <= width {
        return Err(PricingError::GridTooCoarse { n, min_n: min_nodes(b, width) });
    }
    let k_lo = k_lo.unwrap_or(0.5 * (k_min + k_max - s));
    if !(k_lo < k_min && k_lo + s > k_max) {
        return Err(PricingError::InvalidArgument(format!(
            "lower node {k_lo} leaves strikes in [{k_min}, {k_max}] outside the grid"
        )));
    }
    let dz = b / (n - 1) as f64;
    Ok(FftGrid { b, n, dz, dk: 2.0 * PI / (n as f64 * dz), k_lo, k_min, k_max })
}

/// Simpson-pattern weights `1/3, 4/3, 2/3, 4/3, ...` valid for any node count.
pub fn fft_weights(n: usize) -> Vec<f64> {
    (0..n)
        .map(|j| {
            if j == 0 {
                1.0 / 3.0
            } else if j % 2 == 1 {
                4.0 / 3.0
            } else {
                2.0 / 3.0
            }
        })
        .collect()
}

/// DFT inputs `x_j = (Δz/π) w_j e^{-i j Δz k̲} η(z_j)`.
pub fn fft_inputs(grid: &FftGrid, eta: &Eta) -> Result<Vec<Complex64>> {
    fft_weights(grid.n)
        .into_iter()
        .enumerate()
        .map(|(j, w)| {
            let z = if j == 0 { zero_node_shift(grid.dz) } else { grid.z(j) };
            let phase = Complex64::from_polar(1.0, -grid.z(j) * grid.k_lo);
            Ok(grid.dz / PI * w * phase * eta.at(z)?)
        })
        .collect()
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Forward DFT `X_n = Σ_j x_j e^{-2πi jn/N}`.
pub fn dft(x: &[Complex64]) -> Vec<Complex64> {
    let mut buf = x.to_vec();
    if buf.is_empty() {
        return buf;
    }
    let fft = PLANNER.with(|p| p.borrow_mut().plan_fft_forward(buf.len()));
    fft.process(&mut buf);
    buf
}

/// Direct `O(N²)` evaluation of the same sum.
pub fn dft_direct(x: &[Complex64]) -> Vec<Complex64> {
    let n = x.len();
    (0..n)
        .map(|m| {
            x.iter()
                .enumerate()
                .map(|(j, xj)| xj * Complex64::from_polar(1.0, -2.0 * PI * ((j * m) % n) as f64 / n as f64))
                .sum()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FftResult {
    pub grid: FftGrid,
    /// Normalized prices at the nodes `k̲ + nΔk`.
    pub node_prices: Vec<f64>,
    pub normalized: Vec<f64>,
    /// Ladder prices in currency units.
    pub prices: Vec<f64>,
    pub flag_otm_unstable: Vec<bool>,
}

fn interpolate(grid: &FftGrid, values: &[f64], k: f64) -> f64 {
    let p = (k - grid.k_lo) / grid.dk;
    let nearest = p.round();
    if (p - nearest).abs() < 1e-9 {
        return values[nearest as usize];
    }
    let i = (p.floor() as usize).min(grid.n - 2);
    let frac = p - i as f64;
    values[i] + frac * (values[i + 1] - values[i])
}

pub fn fft_price_ladder(
    ladder: &StrikeLadder,
    model: &ModelSpec,
    offset: OffsetKind,
    b: f64,
    n: usize,
) -> Result<FftResult> {
    let grid = build_grid(ladder, b, n)?;
    fft_price_on_grid(ladder, model, offset, &grid)
}

pub fn fft_price_on_grid(ladder: &StrikeLadder, model: &ModelSpec, offset: OffsetKind, grid: &FftGrid) -> Result<FftResult> {
    ladder.validate()?;
    let MarketSpec { r, t, s0 } = ladder.market;
    let eta = Eta::new(offset, ladder.kind, model, &ladder.market)?;
    let transformed = dft(&fft_inputs(grid, &eta)?);
    let node_prices = transformed
        .iter()
        .enumerate()
        .map(|(i, v)| Ok(v.re + offset_value(offset, ladder.kind, grid.k(i), r, t)?))
        .collect::<Result<Vec<f64>>>()?;
    if node_prices.iter().any(|v| !v.is_finite()) {
        return Err(PricingError::NumericOverflow { what: "fft ladder", z_re: grid.b, z_im: 0.0 });
    }
    let normalized: Vec<f64> = ladder.log_strikes().iter().map(|&k| interpolate(grid, &node_prices, k)).collect();
    let scale = match ladder.kind {
        OptionKind::European => s0,
        OptionKind::Digital => 1.0,
    };
    Ok(FftResult {
        grid: *grid,
        prices: normalized.iter().map(|v| v * scale).collect(),
        flag_otm_unstable: normalized.iter().map(|&v| v < OTM_FLAG_LEVEL).collect(),
        normalized,
        node_prices,
    })
}
