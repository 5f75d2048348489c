//! One-by-one pricing: a composite Simpson evaluation of the inverse Fourier
//! transform of `η` on `[0, B]`, followed by adding the offset back.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::models::ModelSpec;
use crate::offsets::{normal_cdf, offset_value, zero_node_shift, Eta, OffsetKind, OptionKind, OptionSpec};

/// Normalized prices in `[-NEGATIVE_TOLERANCE, 0)` are clamped to zero.
pub const NEGATIVE_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub offset: OffsetKind,
    /// Truncation point of the frequency integral.
    pub b: f64,
    /// Number of Simpson subintervals (N + 1 nodes).
    pub n: usize,
}

impl QuadratureConfig {
    pub fn new(offset: OffsetKind, b: f64, n: usize) -> Self {
        QuadratureConfig { offset, b, n }
    }

    /// Smooth offset at B = 40, N = 64.
    pub fn soa_tuned() -> Self {
        QuadratureConfig::new(OffsetKind::Smooth, 40.0, 64)
    }

    /// Carr-Madan offset at B = 360, N = 576.
    pub fn cma_tuned() -> Self {
        QuadratureConfig::new(OffsetKind::CarrMadan, 360.0, 576)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.b.is_finite() || self.b <= 0.0 {
            return Err(PricingError::InvalidArgument(format!("truncation point must be > 0, got {}", self.b)));
        }
        if self.n < 2 || !self.n.is_multiple_of(2) {
            return Err(PricingError::InvalidArgument(format!(
                "composite Simpson needs an even subinterval count >= 2, got {}",
                self.n
            )));
        }
        Ok(())
    }

    pub fn dz(&self) -> f64 {
        self.b / self.n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriceResult {
    /// Price in currency units of the spot.
    pub price: f64,
    pub normalized_price: f64,
    pub config: QuadratureConfig,
    /// Set when a slightly negative quadrature value was clamped to zero.
    pub clamped: bool,
}

#[inline]
fn simpson_weight(j: usize, n: usize) -> f64 {
    if j == 0 || j == n {
        1.0 / 3.0
    } else if j % 2 == 1 {
        4.0 / 3.0
    } else {
        2.0 / 3.0
    }
}

/// Composite Simpson weights `{1, 4, 2, ..., 2, 4, 1} / 3` for `n` subintervals.
pub fn simpson_weights(n: usize) -> Result<Vec<f64>> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(PricingError::InvalidArgument(format!("Simpson rule needs even n >= 2, got {n}")));
    }
    Ok((0..=n).map(|j| simpson_weight(j, n)).collect())
}

/// `V̂(k) ≈ (Δz/π) Re Σ w_j e^{-i z_j k} η(z_j)`.
pub fn modified_price(eta: &Eta, k: f64, cfg: &QuadratureConfig) -> Result<f64> {
    cfg.validate()?;
    let dz = cfg.dz();
    let mut acc = Complex64::new(0.0, 0.0);
    for j in 0..=cfg.n {
        let z = if j == 0 { zero_node_shift(dz) } else { j as f64 * dz };
        let phase = Complex64::from_polar(1.0, -z * k);
        acc += simpson_weight(j, cfg.n) * phase * eta.at(z)?;
    }
    Ok(dz / PI * acc.re)
}

/// Unclamped normalized price `V̂(k) + offset(k)`.
pub fn normalized_quadrature(opt: &OptionSpec, model: &ModelSpec, cfg: &QuadratureConfig) -> Result<f64> {
    opt.validate()?;
    let eta = Eta::new(cfg.offset, opt.kind, model, &opt.market)?;
    let k = opt.log_strike();
    let m = &opt.market;
    Ok(modified_price(&eta, k, cfg)? + offset_value(cfg.offset, opt.kind, k, m.r, m.t)?)
}

/// Price a single option by Simpson-rule Fourier inversion.
pub fn price_single(opt: &OptionSpec, model: &ModelSpec, cfg: &QuadratureConfig) -> Result<PriceResult> {
    let raw = normalized_quadrature(opt, model, cfg)?;
    let (normalized_price, clamped) = clamp_normalized(raw, cfg)?;
    Ok(PriceResult { price: normalized_price * opt.scale(), normalized_price, config: *cfg, clamped })
}

pub(crate) fn clamp_normalized(raw: f64, cfg: &QuadratureConfig) -> Result<(f64, bool)> {
    if !raw.is_finite() {
        return Err(PricingError::NumericOverflow { what: "quadrature", z_re: cfg.b, z_im: 0.0 });
    }
    if raw < -NEGATIVE_TOLERANCE {
        return Err(PricingError::QuadratureDiagnostic { price: raw, b: cfg.b, n: cfg.n });
    }
    if raw < 0.0 {
        Ok((0.0, true))
    } else {
        Ok((raw, false))
    }
}

/// Black-Scholes value of a European or digital call.
pub fn closed_form_bs(opt: &OptionSpec, sigma: f64) -> f64 {
    let (s0, r, t) = (opt.market.s0, opt.market.r, opt.market.t);
    let k = opt.strike;
    let df = (-r * t).exp();
    let vol = sigma * t.sqrt();
    if vol <= 0.0 {
        let fwd_itm = s0 * (r * t).exp() >= k;
        return match opt.kind {
            OptionKind::European => (s0 - k * df).max(0.0),
            OptionKind::Digital => {
                if fwd_itm {
                    df
                } else {
                    0.0
                }
            }
        };
    }
    let d1 = ((s0 / k).ln() + (r + 0.5 * sigma * sigma) * t) / vol;
    let d2 = d1 - vol;
    match opt.kind {
        OptionKind::European => s0 * normal_cdf(d1) - k * df * normal_cdf(d2),
        OptionKind::Digital => df * normal_cdf(d2),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1(kind: OptionKind) -> OptionSpec {
        OptionSpec::new(kind, 150.0, 100.0, 0.25, 0.02)
    }

    #[test]
    fn weights() {
        let third = 1.0 / 3.0;
        assert_eq!(simpson_weights(2).unwrap(), vec![third, 4.0 * third, third]);
        assert_eq!(
            simpson_weights(4).unwrap(),
            vec![third, 4.0 * third, 2.0 * third, 4.0 * third, third]
        );
        let sum: f64 = simpson_weights(64).unwrap().iter().sum::<f64>() * (40.0 / 64.0);
        assert!((sum - 40.0).abs() < 1e-12);
        assert!(simpson_weights(5).is_err());
        assert!(simpson_weights(0).is_err());
    }

    #[test]
    fn config_rejects_odd_n() {
        assert!(QuadratureConfig::new(OffsetKind::Smooth, 40.0, 63).validate().is_err());
        assert!(QuadratureConfig::new(OffsetKind::Smooth, 0.0, 64).validate().is_err());
    }

    #[test]
    fn closed_form_limits() {
        let deep = OptionSpec::new(OptionKind::European, 150.0, 150.0 * 1e-8, 0.25, 0.02);
        assert!((closed_form_bs(&deep, 0.25) - (150.0 - 1.5e-6 * (-0.005f64).exp())).abs() < 1e-9);

        let o = table1(OptionKind::European);
        let det = closed_form_bs(&o, 1e-9);
        assert!((det - (150.0 - 100.0 * (-0.005f64).exp())).abs() < 1e-9);

        // d1 = (ln 1.5 + 0.05125 * 0.25) / 0.125
        let d1 = ((1.5f64).ln() + (0.02 + 0.03125) * 0.25) / (0.25 * 0.5);
        let d2 = d1 - 0.125;
        let expected = 150.0 * normal_cdf(d1) - 100.0 * (-0.005f64).exp() * normal_cdf(d2);
        assert!((closed_form_bs(&o, 0.25) - expected).abs() < 1e-12);
        assert!((expected - 50.50).abs() < 0.01);
    }

    #[test]
    fn soa_matches_black_scholes() {
        let model = ModelSpec::Gbm { sigma: 0.25 };
        for kind in [OptionKind::European, OptionKind::Digital] {
            let o = table1(kind);
            let p = price_single(&o, &model, &QuadratureConfig::soa_tuned()).unwrap();
            let bs = closed_form_bs(&o, 0.25);
            assert!((p.price / bs - 1.0).abs() < 2e-4, "{kind:?}: {} vs {bs}", p.price);
        }
    }

    #[test]
    fn smooth_offset_is_exact_for_unit_vol_gbm() {
        let model = ModelSpec::Gbm { sigma: 1.0 };
        let o = table1(OptionKind::European);
        for (b, n) in [(5.0, 2), (40.0, 64), (123.0, 10)] {
            let cfg = QuadratureConfig::new(OffsetKind::Smooth, b, n);
            let p = price_single(&o, &model, &cfg).unwrap();
            let off = offset_value(OffsetKind::Smooth, OptionKind::European, o.log_strike(), 0.02, 0.25).unwrap();
            assert_eq!(p.normalized_price, off);
        }
    }

    #[test]
    fn european_price_non_increasing_in_strike() {
        let model = ModelSpec::Heston { kappa: 2.3, theta: 0.36, sigma: 0.1, rho: 0.6, v0: 0.49 };
        let cfg = QuadratureConfig::soa_tuned();
        let mut prev = f64::INFINITY;
        for i in 0..=10 {
            let k = 150.0 * (0.95 + 0.01 * i as f64);
            let p = price_single(&OptionSpec::new(OptionKind::European, 150.0, k, 0.25, 0.02), &model, &cfg)
                .unwrap()
                .price;
            assert!(p <= prev + 1e-8);
            prev = p;
        }
    }

    #[test]
    fn negative_values_are_diagnosed() {
        let cfg = QuadratureConfig::soa_tuned();
        assert_eq!(clamp_normalized(-5e-7, &cfg).unwrap(), (0.0, true));
        assert!(matches!(
            clamp_normalized(-1e-3, &cfg),
            Err(PricingError::QuadratureDiagnostic { n: 64, .. })
        ));
    }
}
