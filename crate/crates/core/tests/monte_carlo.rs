use soa_core::mc::{mc_cf_probe, mc_discounted_terminal, mc_price, McConfig};
use soa_core::offsets::OptionKind;
use soa_core::quad::{closed_form_bs, price_single, QuadratureConfig};
use soa_core::tuner::{reference_models, reference_option};
use soa_core::{MarketSpec, ModelSpec};

fn cfg(paths: usize) -> McConfig {
    McConfig { paths, ..McConfig::default() }
}

#[test]
fn gbm_matches_black_scholes() {
    let model = ModelSpec::Gbm { sigma: 0.25 };
    for kind in [OptionKind::European, OptionKind::Digital] {
        let o = reference_option(kind);
        let r = mc_price(&o, &model, &cfg(1_000_000)).unwrap();
        let bs = closed_form_bs(&o, 0.25);
        assert!((r.price - bs).abs() <= 3.0 * r.std_error, "{kind:?}: {} ± {} vs {bs}", r.price, r.std_error);
    }
}

#[test]
fn evgp_agrees_with_smooth_offset_pricer() {
    let model = ModelSpec::Evgp { theta: 0.1, sigma: 0.2, nu: 0.3 };
    let o = reference_option(OptionKind::European);
    let r = mc_price(&o, &model, &cfg(1_000_000)).unwrap();
    let soa = price_single(&o, &model, &QuadratureConfig::soa_tuned()).unwrap().price;
    assert!((r.price - soa).abs() <= (3.0 * r.std_error).max(2e-4 * soa));
}

#[test]
fn discounted_stock_is_a_martingale() {
    let market = MarketSpec::new(150.0, 0.02, 0.25);
    for (name, model) in reference_models() {
        let r = mc_discounted_terminal(&model, &market, &cfg(200_000)).unwrap();
        assert!((r.price - 150.0).abs() <= 4.0 * r.std_error, "{name}: {} ± {}", r.price, r.std_error);
    }
}

#[test]
fn cf_probe_matches_characteristic_function() {
    let market = MarketSpec::new(1.0, 0.02, 0.25);
    for (name, model) in reference_models() {
        let p = mc_cf_probe(&model, &market, 1.0, &cfg(400_000)).unwrap();
        let cf = model.cf_dagger(&market, num_complex::Complex64::new(1.0, 0.0)).unwrap();
        assert!((p.value.re - cf.re).abs() <= 3.0 * p.se_re, "{name} re");
        assert!((p.value.im - cf.im).abs() <= 3.0 * p.se_im, "{name} im");
    }
}

#[test]
fn fixed_seed_is_bit_identical() {
    let o = reference_option(OptionKind::Digital);
    for (_, model) in reference_models() {
        let a = mc_price(&o, &model, &cfg(50_000)).unwrap();
        let b = mc_price(&o, &model, &cfg(50_000)).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn quadrupling_paths_halves_the_error() {
    let o = reference_option(OptionKind::European);
    let model = ModelSpec::Evgp { theta: 0.1, sigma: 0.2, nu: 0.3 };
    let a = mc_price(&o, &model, &cfg(100_000)).unwrap();
    let b = mc_price(&o, &model, &cfg(400_000)).unwrap();
    let ratio = a.std_error / b.std_error;
    assert!((ratio / 2.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}
