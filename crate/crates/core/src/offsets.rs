//! Offset terms and the transforms `η = F[V - offset]`.
//!
//! All quantities are normalized to `s0 = 1` and written in the log-strike
//! `k = ln(K / s0)`. The Carr-Madan offset is the discounted payoff at the
//! forward `e^{rT}`; the smooth offset is the price of the same contract on a
//! unit-volatility GBM, which has closed forms in terms of the normal CDF.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};
use crate::models::{cf_wedge, ComplexValue, MarketSpec, ModelSpec};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptionKind {
    European,
    Digital,
}

impl OptionKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OptionKind::European => "european",
            OptionKind::Digital => "digital",
        }
    }
}

impl std::str::FromStr for OptionKind {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "european" | "call" | "euro" => Ok(OptionKind::European),
            "digital" | "binary" => Ok(OptionKind::Digital),
            other => Err(PricingError::Parse(format!("unknown option kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OffsetKind {
    #[serde(alias = "cm", alias = "cma")]
    CarrMadan,
    #[serde(alias = "soa")]
    Smooth,
}

impl OffsetKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OffsetKind::CarrMadan => "carrmadan",
            OffsetKind::Smooth => "smooth",
        }
    }
}

impl std::str::FromStr for OffsetKind {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "carrmadan" | "carr-madan" | "cm" | "cma" => Ok(OffsetKind::CarrMadan),
            "smooth" | "soa" => Ok(OffsetKind::Smooth),
            other => Err(PricingError::Parse(format!("unknown offset '{other}'"))),
        }
    }
}

/// A European call or cash-or-nothing digital call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptionSpec {
    pub kind: OptionKind,
    pub strike: f64,
    pub market: MarketSpec,
}

impl OptionSpec {
    pub fn new(kind: OptionKind, s0: f64, strike: f64, t: f64, r: f64) -> Self {
        OptionSpec { kind, strike, market: MarketSpec::new(s0, r, t) }
    }

    pub fn validate(&self) -> Result<()> {
        self.market.validate()?;
        if !self.strike.is_finite() || self.strike <= 0.0 {
            return Err(PricingError::Domain(format!("strike must satisfy K > 0, got {}", self.strike)));
        }
        if !self.log_strike().is_finite() {
            return Err(PricingError::Domain("normalized log-strike is not finite".into()));
        }
        Ok(())
    }

    /// `k = ln(K / s0)`.
    pub fn log_strike(&self) -> f64 {
        (self.strike / self.market.s0).ln()
    }

    /// Factor converting a normalized price back to currency units.
    pub fn scale(&self) -> f64 {
        match self.kind {
            OptionKind::European => self.market.s0,
            OptionKind::Digital => 1.0,
        }
    }
}

/// Standard normal CDF through the complementary error function.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Discounted offset term at normalized log-strike `k`.
pub fn offset_value(offset: OffsetKind, option: OptionKind, k: f64, r: f64, t: f64) -> Result<f64> {
    match offset {
        OffsetKind::CarrMadan => Ok(match option {
            OptionKind::European => (1.0 - (k - r * t).exp()).max(0.0),
            OptionKind::Digital => {
                if r * t >= k {
                    (-r * t).exp()
                } else {
                    0.0
                }
            }
        }),
        OffsetKind::Smooth => {
            if t <= 0.0 || !t.is_finite() {
                return Err(PricingError::DegenerateMaturity(t));
            }
            let sqrt_t = t.sqrt();
            let d2 = (-k + (r - 0.5) * t) / sqrt_t;
            Ok(match option {
                OptionKind::European => {
                    let d1 = (-k + (r + 0.5) * t) / sqrt_t;
                    normal_cdf(d1) - (k - r * t).exp() * normal_cdf(d2)
                }
                OptionKind::Digital => (-r * t).exp() * normal_cdf(d2),
            })
        }
    }
}

/// Frequency used in place of the removable singularity at `z = 0`.
pub fn zero_node_shift(dz: f64) -> f64 {
    (dz * 1e-4).max(1e-8)
}

/// `η(z)` for a fixed contract type, model and market, validated once.
#[derive(Debug, Clone, Copy)]
pub struct Eta {
    offset: OffsetKind,
    option: OptionKind,
    model: ModelSpec,
    r: f64,
    t: f64,
}

impl Eta {
    pub fn new(offset: OffsetKind, option: OptionKind, model: &ModelSpec, market: &MarketSpec) -> Result<Self> {
        model.validate()?;
        market.validate()?;
        if offset == OffsetKind::Smooth && market.t <= 0.0 {
            return Err(PricingError::DegenerateMaturity(market.t));
        }
        Ok(Eta { offset, option, model: *model, r: market.r, t: market.t })
    }

    fn phi_dagger(&self, z: ComplexValue) -> Result<ComplexValue> {
        let log = self.model.ln_cf_dagger(self.t, z)?;
        if log.re == f64::NEG_INFINITY {
            return Ok(Complex64::new(0.0, 0.0));
        }
        Ok(log.exp())
    }

    fn anchor(&self, z: ComplexValue) -> ComplexValue {
        match self.offset {
            OffsetKind::CarrMadan => Complex64::new(1.0, 0.0),
            OffsetKind::Smooth => cf_wedge(z, self.t),
        }
    }

    /// Evaluate at a nonzero real frequency.
    pub fn at(&self, z: f64) -> Result<ComplexValue> {
        if z == 0.0 || !z.is_finite() {
            return Err(PricingError::InvalidArgument(format!(
                "eta is evaluated at nonzero finite frequencies only, got {z}"
            )));
        }
        let (r, t) = (self.r, self.t);
        let iz = I * z;
        match self.option {
            OptionKind::European => {
                let zs = Complex64::new(z, -1.0);
                let diff = self.phi_dagger(zs)? - self.anchor(zs);
                Ok((iz * r * t).exp() * diff / (iz * (iz + 1.0)))
            }
            OptionKind::Digital => {
                let zc = Complex64::new(z, 0.0);
                let diff = self.phi_dagger(zc)? - self.anchor(zc);
                Ok(((iz - 1.0) * r * t).exp() * diff / iz)
            }
        }
    }
}

/// One-shot evaluation of `η(z)`.
pub fn eta(
    offset: OffsetKind,
    option: OptionKind,
    model: &ModelSpec,
    market: &MarketSpec,
    z: f64,
) -> Result<ComplexValue> {
    Eta::new(offset, option, model, market)?.at(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn normal_cdf_reference_values() {
        assert_eq!(normal_cdf(0.0), 0.5);
        assert!((normal_cdf(40.0) - 1.0).abs() < 1e-15);
        // high-precision reference values (50-digit arithmetic)
        assert!((normal_cdf(1.0) - 0.841_344_746_068_542_9).abs() < 1e-15);
        assert!((normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((normal_cdf(-3.0) - 0.001_349_898_031_630_094_6).abs() < 1e-17);
        assert!((normal_cdf(2.5) - 0.993_790_334_674_223_6).abs() < 1e-15);
    }

    #[test]
    fn carr_madan_offsets() {
        let (r, t) = (0.02, 0.25);
        assert_eq!(offset_value(OffsetKind::CarrMadan, OptionKind::European, r * t, r, t).unwrap(), 0.0);
        // closed inequality at the kink
        assert_eq!(
            offset_value(OffsetKind::CarrMadan, OptionKind::Digital, r * t, r, t).unwrap(),
            (-r * t).exp()
        );
        assert_eq!(offset_value(OffsetKind::CarrMadan, OptionKind::Digital, r * t + 1e-12, r, t).unwrap(), 0.0);
    }

    #[test]
    fn smooth_offsets() {
        let (r, t) = (0.02, 0.25);
        let deep = offset_value(OffsetKind::Smooth, OptionKind::European, -40.0, r, t).unwrap();
        assert!((deep - 1.0).abs() < 1e-12);
        let dig = offset_value(OffsetKind::Smooth, OptionKind::Digital, r * t, r, t).unwrap();
        let expected = (-0.005f64).exp() * normal_cdf(-(0.25f64).sqrt() / 2.0);
        assert_relative_eq!(dig, expected, max_relative = 1e-15);
        assert!(matches!(
            offset_value(OffsetKind::Smooth, OptionKind::Digital, 0.0, r, 0.0),
            Err(PricingError::DegenerateMaturity(_))
        ));
    }

    #[test]
    fn smooth_offset_vanishes_for_unit_vol_gbm() {
        let model = ModelSpec::Gbm { sigma: 1.0 };
        let market = MarketSpec::new(1.0, 0.03, 0.7);
        for option in [OptionKind::European, OptionKind::Digital] {
            let e = Eta::new(OffsetKind::Smooth, option, &model, &market).unwrap();
            for z in [0.01, 0.5, 3.0, 40.0] {
                assert!(e.at(z).unwrap().norm() < 1e-15);
            }
        }
    }

    #[test]
    fn eta_rejects_zero_frequency() {
        let market = MarketSpec::new(1.0, 0.02, 0.25);
        let model = ModelSpec::Gbm { sigma: 0.25 };
        assert!(eta(OffsetKind::Smooth, OptionKind::European, &model, &market, 0.0).is_err());
    }

    #[test]
    fn eta_conjugate_symmetry() {
        let market = MarketSpec::new(1.0, 0.02, 0.25);
        let model = ModelSpec::Evgp { theta: 0.1, sigma: 0.2, nu: 0.3 };
        for offset in [OffsetKind::CarrMadan, OffsetKind::Smooth] {
            for option in [OptionKind::European, OptionKind::Digital] {
                let e = Eta::new(offset, option, &model, &market).unwrap();
                for z in [0.3, 2.0, 17.0] {
                    let d = e.at(-z).unwrap() - e.at(z).unwrap().conj();
                    assert!(d.norm() < 1e-14 * e.at(z).unwrap().norm().max(1e-3));
                }
            }
        }
    }
}
