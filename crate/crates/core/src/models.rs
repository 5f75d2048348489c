//! Stock-price models expressed as `S_T = s0 * exp(rT + X†_T)`.
//!
//! Every model exposes the characteristic function of the compensated driver
//! `X†_T`, which is the only model-dependent input of the Fourier pricers.
//! GBM and the exponential variance-gamma process are true exponential Lévy
//! models and get `Φ† = e^{iζzT} Φ_{X_T}`. Heston is not; its `Φ†` is read off
//! the closed-form log-price characteristic function with the `ln s0 + rT`
//! drift removed.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{PricingError, Result};

pub type ComplexValue = Complex64;

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Parameters of one of the three supported stock-price models.
///
/// Parses from a mapping tagged by `model`:
/// `{"model": "heston", "kappa": 2.3, "theta": 0.36, "sigma": 0.1, "rho": 0.6, "v0": 0.49}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelSpec {
    Gbm {
        sigma: f64,
    },
    Heston {
        kappa: f64,
        theta: f64,
        sigma: f64,
        rho: f64,
        v0: f64,
    },
    Evgp {
        theta: f64,
        sigma: f64,
        nu: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Gbm,
    Heston,
    Evgp,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Gbm => "gbm",
            ModelKind::Heston => "heston",
            ModelKind::Evgp => "evgp",
        }
    }
}

impl std::str::FromStr for ModelKind {
    type Err = PricingError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gbm" => Ok(ModelKind::Gbm),
            "heston" | "hm" => Ok(ModelKind::Heston),
            "evgp" | "vg" => Ok(ModelKind::Evgp),
            other => Err(PricingError::Parse(format!("unknown model '{other}'"))),
        }
    }
}

/// Market data shared by every contract on one underlying.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketSpec {
    /// Continuously compounded risk-free rate per year.
    pub r: f64,
    /// Maturity in years.
    pub t: f64,
    /// Spot price.
    pub s0: f64,
}

impl MarketSpec {
    pub fn new(s0: f64, r: f64, t: f64) -> Self {
        MarketSpec { r, t, s0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.r.is_finite() {
            return Err(PricingError::Domain(format!("rate must be finite, got {}", self.r)));
        }
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(PricingError::Domain(format!("maturity must satisfy T >= 0, got {}", self.t)));
        }
        if !self.s0.is_finite() || self.s0 <= 0.0 {
            return Err(PricingError::Domain(format!("spot must satisfy s0 > 0, got {}", self.s0)));
        }
        Ok(())
    }
}

fn nonneg(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(PricingError::Domain(format!("{name} must be finite and >= 0, got {v}")))
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(PricingError::Domain(format!("{name} must be finite and > 0, got {v}")))
    }
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Gbm { .. } => ModelKind::Gbm,
            ModelSpec::Heston { .. } => ModelKind::Heston,
            ModelSpec::Evgp { .. } => ModelKind::Evgp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            ModelSpec::Gbm { sigma } => positive("GBM sigma", sigma),
            ModelSpec::Heston { kappa, theta, sigma, rho, v0 } => {
                nonneg("Heston kappa", kappa)?;
                nonneg("Heston theta", theta)?;
                nonneg("Heston sigma", sigma)?;
                nonneg("Heston v0", v0)?;
                if !rho.is_finite() || rho.abs() > 1.0 {
                    return Err(PricingError::Domain(format!("Heston rho must satisfy |rho| <= 1, got {rho}")));
                }
                Ok(())
            }
            ModelSpec::Evgp { theta, sigma, nu } => {
                if !theta.is_finite() {
                    return Err(PricingError::Domain(format!("EVGP theta must be finite, got {theta}")));
                }
                positive("EVGP sigma", sigma)?;
                positive("EVGP nu", nu)?;
                let arg = 1.0 - theta * nu - 0.5 * sigma * sigma * nu;
                if arg > 0.0 {
                    Ok(())
                } else {
                    Err(PricingError::Domain(format!(
                        "EVGP admissibility violated: 1 - theta*nu - sigma^2*nu/2 = {arg} is not > 0"
                    )))
                }
            }
        }
    }

    /// Martingale drift correction ζ. `None` for Heston, whose `Φ†` comes from
    /// the log-price characteristic function instead.
    pub fn compensator(&self) -> Result<Option<f64>> {
        self.validate()?;
        Ok(match *self {
            ModelSpec::Gbm { sigma } => Some(-0.5 * sigma * sigma),
            ModelSpec::Evgp { theta, sigma, nu } => {
                Some((1.0 - theta * nu - 0.5 * sigma * sigma * nu).ln() / nu)
            }
            ModelSpec::Heston { .. } => None,
        })
    }

    /// Characteristic function of the uncompensated Lévy driver `X_t`.
    pub fn cf_levy(&self, z: ComplexValue, t: f64) -> Result<ComplexValue> {
        check_time(t)?;
        let log = match *self {
            ModelSpec::Gbm { sigma } => -0.5 * sigma * sigma * z * z * t,
            ModelSpec::Evgp { theta, sigma, nu } => evgp_log_cf(theta, sigma, nu, z, t),
            ModelSpec::Heston { .. } => return Err(PricingError::UnsupportedModel("Heston")),
        };
        finite_exp(log, "cf_levy", z)
    }

    /// Characteristic function of the compensated driver `X†_T` at `t = T`.
    pub fn cf_dagger(&self, market: &MarketSpec, z: ComplexValue) -> Result<ComplexValue> {
        finite_exp(self.ln_cf_dagger(market.t, z)?, "cf_dagger", z)
    }

    /// `ln Φ†(z)` at maturity `t`, evaluated without forming any intermediate
    /// that can overflow.
    pub fn ln_cf_dagger(&self, t: f64, z: ComplexValue) -> Result<ComplexValue> {
        check_time(t)?;
        let log = match *self {
            ModelSpec::Gbm { sigma } => {
                let zeta = -0.5 * sigma * sigma;
                I * zeta * z * t - 0.5 * sigma * sigma * z * z * t
            }
            ModelSpec::Evgp { theta, sigma, nu } => {
                let zeta = (1.0 - theta * nu - 0.5 * sigma * sigma * nu).ln() / nu;
                I * zeta * z * t + evgp_log_cf(theta, sigma, nu, z, t)
            }
            ModelSpec::Heston { kappa, theta, sigma, rho, v0 } => {
                heston_ln_cf_dagger(kappa, theta, sigma, rho, v0, z, t)
            }
        };
        if log.re.is_finite() && log.im.is_finite() {
            Ok(log)
        } else if log.re == f64::NEG_INFINITY {
            // underflow of the characteristic function itself is benign
            Ok(Complex64::new(f64::NEG_INFINITY, 0.0))
        } else {
            Err(PricingError::NumericOverflow { what: "cf_dagger", z_re: z.re, z_im: z.im })
        }
    }
}

/// Characteristic function of `-T/2 + B_T`, the driver of the unit-volatility
/// GBM behind the smooth offset.
pub fn cf_wedge(z: ComplexValue, t: f64) -> ComplexValue {
    (-0.5 * t * (I * z + z * z)).exp()
}

fn check_time(t: f64) -> Result<()> {
    if t.is_finite() && t >= 0.0 {
        Ok(())
    } else {
        Err(PricingError::Domain(format!("time must satisfy t >= 0, got {t}")))
    }
}

fn finite_exp(log: ComplexValue, what: &'static str, z: ComplexValue) -> Result<ComplexValue> {
    if log.re == f64::NEG_INFINITY {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let v = log.exp();
    if v.re.is_finite() && v.im.is_finite() {
        Ok(v)
    } else {
        Err(PricingError::NumericOverflow { what, z_re: z.re, z_im: z.im })
    }
}

/// `ln (1 - izθν + σ²νz²/2)^(-t/ν)` on the principal branch.
fn evgp_log_cf(theta: f64, sigma: f64, nu: f64, z: ComplexValue, t: f64) -> ComplexValue {
    let base = 1.0 - I * z * theta * nu + 0.5 * sigma * sigma * nu * z * z;
    -(t / nu) * base.ln()
}

/// `(1 - e^{-u t}) / u`, continuous through `u = 0`.
fn one_minus_exp_over(u: ComplexValue, t: f64) -> ComplexValue {
    let x = u * t;
    if x.norm() < 1e-5 {
        t * (1.0 - x / 2.0 + x * x / 6.0 - x * x * x / 24.0)
    } else {
        (1.0 - (-x).exp()) / u
    }
}

/// `ln(1 - s g) / s`, continuous through `s = 0`.
fn ln_one_minus_scaled(s: f64, g: ComplexValue) -> ComplexValue {
    if s == 0.0 {
        return -g;
    }
    let q = s * g;
    if q.norm() < 1e-5 {
        -g * (1.0 + q / 2.0 + q * q / 3.0 + q * q * q / 4.0)
    } else {
        (1.0 - q).ln() / s
    }
}

/// Heston `ln Φ†(z)`.
///
/// Algebraically identical to the cosh/sinh closed form with
/// `τ = sqrt(σ²(z²+iz) + (κ - iρσz)²)`:
///
/// ```text
/// ln Φ† = κθTb/σ² - (2κθ/σ²) ln(cosh(τT/2) + (b/τ) sinh(τT/2)) - (z²+iz)V0 / (τ coth(τT/2) + b)
/// ```
///
/// with `b = κ - iρσz`, rewritten through `e^{-τT}` (|e^{-τT}| <= 1 since
/// Re τ >= 0) and `(τ - b)/σ² = (z²+iz)/(τ + b)` so that nothing overflows for
/// large `zT` and the small-σ limit stays well conditioned.
fn heston_ln_cf_dagger(
    kappa: f64,
    theta: f64,
    sigma: f64,
    rho: f64,
    v0: f64,
    z: ComplexValue,
    t: f64,
) -> ComplexValue {
    let w = z * z + I * z;
    if w == Complex64::new(0.0, 0.0) {
        return Complex64::new(0.0, 0.0);
    }
    let s2 = sigma * sigma;
    if s2 == 0.0 {
        // deterministic variance path
        let h = one_minus_exp_over(Complex64::new(kappa, 0.0), t);
        let integrated = theta * t + (v0 - theta) * h;
        return -0.5 * w * integrated;
    }
    let b = kappa - I * rho * sigma * z;
    let tau = (s2 * w + b * b).sqrt();
    // (τ - b)/σ², computed on whichever side avoids cancellation
    let a = if b.re >= 0.0 { w / (tau + b) } else { (tau - b) / s2 };
    let e = (-tau * t).exp();
    let h = one_minus_exp_over(tau, t);
    let g = 0.5 * a * h;
    let drift = -kappa * theta * t * a;
    let power = -2.0 * kappa * theta * ln_one_minus_scaled(s2, g);
    let variance = -w * v0 * h / ((1.0 + e) + b * h);
    drift + power + variance
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> ComplexValue {
        Complex64::new(re, im)
    }

    pub(crate) fn table2_heston() -> ModelSpec {
        ModelSpec::Heston { kappa: 2.30, theta: 0.36, sigma: 0.10, rho: 0.60, v0: 0.49 }
    }

    #[test]
    fn compensator_values() {
        let gbm = ModelSpec::Gbm { sigma: 0.25 };
        assert_eq!(gbm.compensator().unwrap(), Some(-0.03125));

        let tiny = ModelSpec::Evgp { theta: 0.0, sigma: 1e-12, nu: 0.3 };
        assert!(tiny.compensator().unwrap().unwrap().abs() < 1e-20);

        let vg = ModelSpec::Evgp { theta: 0.10, sigma: 0.20, nu: 0.30 };
        let expected = (1.0f64 - 0.03 - 0.006).ln() / 0.3;
        assert_relative_eq!(vg.compensator().unwrap().unwrap(), expected, max_relative = 1e-15);

        assert_eq!(table2_heston().compensator().unwrap(), None);
    }

    #[test]
    fn evgp_admissibility_is_enforced() {
        let bad = ModelSpec::Evgp { theta: 2.0, sigma: 0.2, nu: 0.6 };
        let err = bad.compensator().unwrap_err();
        assert!(matches!(err, PricingError::Domain(ref m) if m.contains("1 - theta*nu")));
    }

    #[test]
    fn parameter_validation() {
        assert!(ModelSpec::Gbm { sigma: 0.0 }.validate().is_err());
        assert!(ModelSpec::Heston { kappa: 1.0, theta: 0.1, sigma: 0.1, rho: 1.5, v0: 0.1 }
            .validate()
            .is_err());
        assert!(ModelSpec::Heston { kappa: -1.0, theta: 0.1, sigma: 0.1, rho: 0.0, v0: 0.1 }
            .validate()
            .is_err());
        assert!(MarketSpec::new(0.0, 0.02, 0.25).validate().is_err());
        assert!(MarketSpec::new(1.0, 0.02, -0.25).validate().is_err());
    }

    #[test]
    fn cf_levy_examples() {
        for m in [ModelSpec::Gbm { sigma: 0.3 }, ModelSpec::Evgp { theta: 0.1, sigma: 0.2, nu: 0.3 }] {
            assert_eq!(m.cf_levy(c(0.0, 0.0), 0.7).unwrap(), c(1.0, 0.0));
        }
        let gbm = ModelSpec::Gbm { sigma: 0.25 };
        let v = gbm.cf_levy(c(1.0, 0.0), 0.25).unwrap();
        assert_relative_eq!(v.re, (-0.0078125f64).exp(), max_relative = 1e-15);
        assert_eq!(v.im, 0.0);

        let vg = ModelSpec::Evgp { theta: 0.10, sigma: 0.20, nu: 0.30 };
        let v = vg.cf_levy(c(1.0, 0.0), 0.3).unwrap();
        let expected = c(1.006, -0.03).inv();
        assert_relative_eq!(v.re, expected.re, max_relative = 1e-14);
        assert_relative_eq!(v.im, expected.im, max_relative = 1e-14);

        assert!(matches!(
            table2_heston().cf_levy(c(1.0, 0.0), 0.25),
            Err(PricingError::UnsupportedModel(_))
        ));
    }

    #[test]
    fn cf_dagger_normalization_and_martingale() {
        let market = MarketSpec::new(150.0, 0.02, 0.25);
        for m in [
            ModelSpec::Gbm { sigma: 0.25 },
            table2_heston(),
            ModelSpec::Evgp { theta: 0.10, sigma: 0.20, nu: 0.30 },
        ] {
            let at0 = m.cf_dagger(&market, c(0.0, 0.0)).unwrap();
            assert!((at0 - 1.0).norm() < 1e-15);
            let at_mi = m.cf_dagger(&market, c(0.0, -1.0)).unwrap();
            assert!((at_mi - 1.0).norm() < 1e-12, "{m:?}: {at_mi}");
        }
    }

    #[test]
    fn cf_wedge_examples() {
        assert_eq!(cf_wedge(c(0.0, 0.0), 0.25), c(1.0, 0.0));
        assert!((cf_wedge(c(0.0, -1.0), 0.25) - 1.0).norm() < 1e-15);
        let v = cf_wedge(c(1.0, 0.0), 0.25);
        let expected = (-0.125f64).exp() * c(0.125f64.cos(), -0.125f64.sin());
        assert!((v - expected).norm() < 1e-15);
    }

    #[test]
    fn heston_matches_printed_form_where_representable() {
        // direct transcription of the cosh/sinh expression, fine for small zT
        let (kappa, theta, sigma, rho, v0) = (2.30, 0.36, 0.10, 0.60, 0.49);
        let t = 0.25;
        for zr in [0.3, 1.0, 4.0, 12.0] {
            for zi in [0.0, -1.0] {
                let z = c(zr, zi);
                let b = kappa - I * rho * sigma * z;
                let tau = (sigma * sigma * (z * z + I * z) + b * b).sqrt();
                let x = tau * t / 2.0;
                let base = x.cosh() + b / tau * x.sinh();
                let printed = (kappa * theta * t * b / (sigma * sigma)).exp()
                    / base.powf(2.0 * kappa * theta / (sigma * sigma))
                    * (-(z * z + I * z) * v0 / (tau / x.tanh() + b)).exp();
                let ours = table2_heston().cf_dagger(&MarketSpec::new(1.0, 0.02, t), z).unwrap();
                assert!((ours - printed).norm() < 1e-11 * printed.norm().max(1.0), "z={z}: {ours} vs {printed}");
            }
        }
    }

    #[test]
    fn heston_large_frequency_is_finite() {
        let market = MarketSpec::new(1.0, 0.02, 0.25);
        for zr in [100.0, 1e3, 1e4, 1e6] {
            let v = table2_heston().cf_dagger(&market, c(zr, -1.0)).unwrap();
            assert!(v.norm() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn heston_zero_volvol_is_deterministic_variance() {
        let market = MarketSpec::new(1.0, 0.0, 1.0);
        let h = ModelSpec::Heston { kappa: 0.0, theta: 0.04, sigma: 0.0, rho: 0.0, v0: 0.04 };
        let g = ModelSpec::Gbm { sigma: 0.2 };
        for zr in [0.5, 3.0, 10.0] {
            let a = h.cf_dagger(&market, c(zr, 0.0)).unwrap();
            let b = g.cf_dagger(&market, c(zr, 0.0)).unwrap();
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn config_mapping_parses() {
        let m: ModelSpec = serde_json::from_str(
            r#"{"model":"heston","kappa":2.3,"theta":0.36,"sigma":0.1,"rho":0.6,"v0":0.49}"#,
        )
        .unwrap();
        assert_eq!(m, table2_heston());
        let m: ModelSpec = serde_json::from_str(r#"{"model":"evgp","theta":0.1,"sigma":0.2,"nu":0.3}"#).unwrap();
        assert_eq!(m.kind(), ModelKind::Evgp);
        assert!(serde_json::from_str::<ModelSpec>(r#"{"model":"cgmy","c":1}"#).is_err());
    }
}
