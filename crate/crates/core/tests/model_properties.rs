use num_complex::Complex64;
use proptest::prelude::*;
use soa_core::offsets::{Eta, OffsetKind, OptionKind};
use soa_core::{cf_wedge, MarketSpec, ModelSpec};

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Admissible draws over the sampling box used for training data.
fn any_model() -> impl Strategy<Value = ModelSpec> {
    let p = 1e-3..0.2f64;
    prop_oneof![
        p.clone().prop_map(|sigma| ModelSpec::Gbm { sigma }),
        (0.0..0.2f64, p.clone(), p.clone(), 0.0..0.2f64, p.clone())
            .prop_map(|(kappa, theta, sigma, rho, v0)| ModelSpec::Heston { kappa, theta, sigma, rho, v0 }),
        (0.0..0.2f64, p.clone(), p).prop_map(|(theta, sigma, nu)| ModelSpec::Evgp { theta, sigma, nu }),
    ]
}

fn any_market() -> impl Strategy<Value = MarketSpec> {
    (1.0 / 365.0..1.0f64, 0.0..0.05f64).prop_map(|(t, r)| MarketSpec::new(1.0, r, t))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 1000, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn martingale_identity(model in any_model(), market in any_market()) {
        let v = model.cf_dagger(&market, c(0.0, -1.0)).unwrap();
        prop_assert!((v - 1.0).norm() < 1e-9, "{model:?}: {v}");
    }

    #[test]
    fn normalization(model in any_model(), market in any_market()) {
        let v = model.cf_dagger(&market, c(0.0, 0.0)).unwrap();
        prop_assert!((v - 1.0).norm() < 1e-12);
    }

    #[test]
    fn hermitian_symmetry(model in any_model(), market in any_market(), z in 0.01..60.0f64) {
        let a = model.cf_dagger(&market, c(-z, 0.0)).unwrap();
        let b = model.cf_dagger(&market, c(z, 0.0)).unwrap().conj();
        prop_assert!((a - b).norm() < 1e-12);
    }

    #[test]
    fn cf_modulus_is_bounded(model in any_model(), market in any_market(), z in 0.0..500.0f64) {
        prop_assert!(model.cf_dagger(&market, c(z, 0.0)).unwrap().norm() <= 1.0 + 1e-12);
    }

    /// The smooth-offset η has no pole at the origin: it stays bounded as z -> 0.
    #[test]
    fn removable_singularity(model in any_model(), market in any_market()) {
        for option in [OptionKind::European, OptionKind::Digital] {
            let e = Eta::new(OffsetKind::Smooth, option, &model, &market).unwrap();
            let near = e.at(1e-7).unwrap();
            let nearer = e.at(1e-9).unwrap();
            prop_assert!(near.is_finite() && (near - nearer).norm() < 1e-5 * (1.0 + near.norm()));
        }
    }
}

#[test]
fn wedge_examples() {
    assert_eq!(cf_wedge(c(0.0, 0.0), 0.7), c(1.0, 0.0));
    assert!((cf_wedge(c(0.0, -1.0), 0.7) - 1.0).norm() < 1e-15);
    let want = (-0.125f64).exp() * c(0.125f64.cos(), -0.125f64.sin());
    assert!((cf_wedge(c(1.0, 0.0), 0.25) - want).norm() < 1e-15);
}

#[test]
fn heston_degenerates_to_gbm() {
    let sigma = 0.3;
    let gbm = ModelSpec::Gbm { sigma };
    let hes = ModelSpec::Heston { kappa: 1e-9, theta: sigma * sigma, sigma: 1e-9, rho: 0.5, v0: sigma * sigma };
    let market = MarketSpec::new(1.0, 0.02, 0.8);
    for i in 0..=100 {
        let z = c(0.5 * i as f64, 0.0);
        let d = hes.cf_dagger(&market, z).unwrap() - gbm.cf_dagger(&market, z).unwrap();
        assert!(d.norm() < 1e-6, "z={z}: {d}");
    }
}

/// `|η_Smooth| <= |η_CM|` far in the tail for the six reference cases.
#[test]
fn tail_dominance() {
    let market = MarketSpec::new(1.0, 0.02, 0.25);
    for (_, model) in soa_core::tuner::reference_models() {
        for option in [OptionKind::European, OptionKind::Digital] {
            let s = Eta::new(OffsetKind::Smooth, option, &model, &market).unwrap();
            let m = Eta::new(OffsetKind::CarrMadan, option, &model, &market).unwrap();
            for z in [50.0, 100.0, 200.0, 500.0] {
                assert!(s.at(z).unwrap().norm() <= m.at(z).unwrap().norm());
            }
        }
    }
}
