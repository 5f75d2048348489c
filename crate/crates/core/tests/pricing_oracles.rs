//! Reference prices from an independent Gil-Pelaez inversion (30-digit
//! arithmetic, little-trap Heston characteristic function, oscillatory
//! quadrature for the variance-gamma tails), frozen here.

use num_complex::Complex64;
use soa_core::dataset::Labeler;
use soa_core::offsets::{eta, OffsetKind, OptionKind, OptionSpec};
use soa_core::quad::{closed_form_bs, normalized_quadrature, price_single, QuadratureConfig};
use soa_core::tuner::{reference_models, reference_option};
use soa_core::{MarketSpec, ModelSpec};

const FROZEN: [(&str, f64, f64); 3] = [
    ("gbm", 50.500815795369065, 0.99437743368663741),
    ("heston", 52.665443176267971, 0.84821267426455796),
    ("evgp", 50.503342191722687, 0.99423349445889147),
];

fn frozen(name: &str, kind: OptionKind) -> f64 {
    let row = FROZEN.iter().find(|r| r.0 == name).unwrap();
    match kind {
        OptionKind::European => row.1,
        OptionKind::Digital => row.2,
    }
}

fn rel_err(offset: OffsetKind, b: f64, name: &str, model: &ModelSpec, kind: OptionKind) -> f64 {
    let o = reference_option(kind);
    let p = price_single(&o, model, &QuadratureConfig::new(offset, b, (10.0 * b) as usize)).unwrap().price;
    (p / frozen(name, kind) - 1.0).abs()
}

#[test]
fn smooth_offset_converges_to_reference_prices() {
    for (name, model) in reference_models() {
        for kind in [OptionKind::European, OptionKind::Digital] {
            let e = rel_err(OffsetKind::Smooth, 8000.0, name, &model, kind);
            assert!(e < 1e-8, "{name} {kind:?}: {e:e}");
        }
    }
}

#[test]
fn carr_madan_offset_converges_slowly() {
    for (name, model) in reference_models() {
        for kind in [OptionKind::European, OptionKind::Digital] {
            let coarse = rel_err(OffsetKind::CarrMadan, 2000.0, name, &model, kind);
            let fine = rel_err(OffsetKind::CarrMadan, 8000.0, name, &model, kind);
            assert!(fine < 1e-4 && fine < coarse, "{name} {kind:?}: {coarse:e} -> {fine:e}");
        }
    }
}

#[test]
fn adaptive_labels_match_reference_prices() {
    for (name, model) in reference_models() {
        for kind in [OptionKind::European, OptionKind::Digital] {
            let o = reference_option(kind);
            let y = Labeler::default().label(&o, &model).unwrap().y * o.scale();
            assert!((y / frozen(name, kind) - 1.0).abs() < 1e-7, "{name} {kind:?}");
        }
    }
}

fn tuned_errors_bps(cfg: QuadratureConfig, expected: [(f64, f64); 3]) {
    for ((name, model), (eu, dg)) in reference_models().into_iter().zip(expected) {
        for (kind, want) in [(OptionKind::European, eu), (OptionKind::Digital, dg)] {
            let o = reference_option(kind);
            let p = normalized_quadrature(&o, &model, &cfg).unwrap() * o.scale();
            let err = (p / frozen(name, kind) - 1.0) * 1e4;
            assert!((err - want).abs() < 1e-3, "{name} {kind:?}: {err} bps, expected {want}");
        }
    }
}

/// Signed errors in bps at `B = 40, N = 64`. The variance-gamma digital keeps
/// a truncation error because its transform decays only like a power of `z`.
#[test]
fn smooth_offset_errors_at_tuned_grid() {
    tuned_errors_bps(QuadratureConfig::soa_tuned(), [(0.0, 0.000308), (0.0, 0.0), (-1.109658, 24.008188)]);
}

/// Signed errors in bps at `B = 360, N = 576`; the digitals converge slowly.
#[test]
fn carr_madan_errors_at_tuned_grid() {
    tuned_errors_bps(QuadratureConfig::cma_tuned(), [(-0.018065, -21.433509), (-0.017322, -25.126950), (-0.017343, -21.445762)]);
}

#[test]
fn black_scholes_reference() {
    for kind in [OptionKind::European, OptionKind::Digital] {
        let o = reference_option(kind);
        assert!((closed_form_bs(&o, 0.25) / frozen("gbm", kind) - 1.0).abs() < 1e-14);
    }
}

#[test]
fn heston_cf_reference_values() {
    let m = ModelSpec::Heston { kappa: 2.3, theta: 0.36, sigma: 0.1, rho: 0.6, v0: 0.49 };
    let market = MarketSpec::new(1.0, 0.02, 0.25);
    for (z, want) in [
        (1.0, Complex64::new(0.94302892594250363, -0.054489858050228706)),
        (7.5, Complex64::new(0.034262926676227359, -0.022495103813493420)),
    ] {
        let got = m.cf_dagger(&market, Complex64::new(z, 0.0)).unwrap();
        assert!((got - want).norm() < 1e-14, "z={z}: {got} vs {want}");
    }
}

/// `η` for the Carr-Madan digital under GBM, against a direct numerical
/// Fourier transform of `V(k) - offset(k)` over log-strikes.
#[test]
fn carr_madan_digital_eta_matches_numerical_transform() {
    let (sigma, r, t) = (0.25f64, 0.02f64, 0.25f64);
    let market = MarketSpec::new(1.0, r, t);
    let model = ModelSpec::Gbm { sigma };
    let z = 10.0;
    let kink = r * t;
    // `right` selects the one-sided offset limit at the kink itself
    let v = |k: f64, right: bool| {
        let o = OptionSpec::new(OptionKind::Digital, 1.0, k.exp(), t, r);
        let off = if k < kink || (k == kink && !right) { (-r * t).exp() } else { 0.0 };
        closed_form_bs(&o, sigma) - off
    };
    // the integrand is discontinuous at k = rT, so integrate each side separately
    let simpson = |a: f64, b: f64, n: usize, right: bool| {
        let h = (b - a) / n as f64;
        (0..=n)
            .map(|j| {
                let w = if j == 0 || j == n {
                    1.0
                } else if j % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let k = a + j as f64 * h;
                w * Complex64::from_polar(1.0, z * k) * v(k, right)
            })
            .sum::<Complex64>()
            * (h / 3.0)
    };
    let numeric = simpson(kink - 4.0, kink, 40_000, false) + simpson(kink, kink + 4.0, 40_000, true);
    let analytic = eta(OffsetKind::CarrMadan, OptionKind::Digital, &model, &market, z).unwrap();
    assert!((numeric - analytic).norm() < 1e-9, "{numeric} vs {analytic}");
}
