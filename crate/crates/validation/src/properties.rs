//! Always-on property checks: martingale identity, MLP gradients, the
//! through-origin regression, serialization and fixed-seed determinism.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use soa_core::bench::ols_origin;
use soa_core::dataset::{generate, sample_contract, DatasetHeader, DatasetRecord, GeneratorConfig, Interval, ModelMix, SamplingBounds};
use soa_core::mc::{mc_price, McConfig};
use soa_core::tuner::{reference_models, reference_option};
use soa_core::{ComplexValue, OptionKind};
use soa_surrogates::mlp::Mlp;
use soa_surrogates::{MlpArchitecture, SurrogateModel, TrainConfig, TrainingConfig, TrainingSet, TreeEnsembleConfig};

use crate::err;

type Check = Result<(bool, String), String>;

/// Largest `|Φ†(−i) − 1|` over random admissible parameter draws.
pub fn martingale_defect(draws: usize, seed: u64) -> Result<f64, String> {
    let wide = Interval::new(0.0, 1.0);
    let bounds = SamplingBounds {
        t: Interval::new(0.0, 2.0),
        sigma: wide,
        kappa: Interval::new(0.0, 5.0),
        theta: wide,
        rho: Interval::new(-0.95, 0.95),
        v0: wide,
        nu: wide,
        ..SamplingBounds::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..draws {
        let (o, m) = sample_contract(&bounds, ModelMix::Uniform, &mut rng).map_err(err)?;
        let v = m.cf_dagger(&o.market, ComplexValue::new(0.0, -1.0)).map_err(err)?;
        worst = worst.max((v - 1.0).norm());
    }
    Ok(worst)
}

/// Relative distance between the backpropagated gradient and central
/// differences on a small random network.
pub fn gradient_check(seed: u64) -> Result<f64, String> {
    let arch = MlpArchitecture { widths: vec![10, 8, 8, 1], ..MlpArchitecture::default() };
    let mut net = Mlp::init(arch, seed).map_err(err)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = 16;
    let x: Vec<f64> = (0..rows * 10).map(|_| rng.random_range(-1.0..1.0)).collect();
    let y: Vec<f64> = (0..rows).map(|_| rng.random_range(0.0..1.0)).collect();
    let (_, grads) = net.loss_and_gradient(&x, &y).map_err(err)?;
    let h = 1e-6;
    let (mut diff, mut norm) = (0.0, 0.0);
    for l in 0..net.layers.len() {
        for is_bias in [false, true] {
            let len = if is_bias { net.layers[l].b.len() } else { net.layers[l].w.len() };
            for i in 0..len {
                let mut loss_at = |delta: f64| {
                    let p = if is_bias { &mut net.layers[l].b[i] } else { &mut net.layers[l].w[i] };
                    *p += delta;
                    let loss = net.loss_and_gradient(&x, &y).map(|r| r.0);
                    let p = if is_bias { &mut net.layers[l].b[i] } else { &mut net.layers[l].w[i] };
                    *p -= delta;
                    loss
                };
                let fd = (loss_at(h).map_err(err)? - loss_at(-h).map_err(err)?) / (2.0 * h);
                let g = if is_bias { grads[l].b[i] } else { grads[l].w[i] };
                diff += (g - fd) * (g - fd);
                norm += g * g;
            }
        }
    }
    Ok((diff / norm).sqrt())
}

/// Largest gap between the closed-form slope and a refining grid search on
/// the residual sum of squares.
pub fn ols_oracle_gap(problems: usize, seed: u64) -> Result<f64, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..problems {
        let n = rng.random_range(3..60);
        let slope = rng.random_range(0.01..3.0);
        let x: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
        let y: Vec<f64> = x.iter().map(|v| slope * v + rng.random_range(-0.1..0.1)).collect();
        let rss = |b: f64| x.iter().zip(&y).map(|(u, v)| (v - b * u).powi(2)).sum::<f64>();
        let (mut lo, mut hi) = (-10.0, 10.0);
        while hi - lo > 1e-9 {
            let step = (hi - lo) / 100.0;
            let best = (0..=100).map(|i| lo + i as f64 * step).min_by(|a, b| rss(*a).total_cmp(&rss(*b))).unwrap();
            (lo, hi) = (best - step, best + step);
        }
        let fit = ols_origin(&x, &y).map_err(err)?;
        worst = worst.max((fit.beta - 0.5 * (lo + hi)).abs());
    }
    Ok(worst)
}

fn small_configs() -> [TrainingConfig; 3] {
    let arch = MlpArchitecture { widths: vec![10, 16, 16, 1], ..MlpArchitecture::default() };
    [
        TrainingConfig::Nn { arch, train: TrainConfig { epochs: 3, batch_size: 32, learning_rate: 1e-2, ..TrainConfig::default() } },
        TrainingConfig::Trees(TreeEnsembleConfig { n_trees: 5, max_depth: 6, ..TreeEnsembleConfig::gradient_boosting() }),
        TrainingConfig::Trees(TreeEnsembleConfig { n_trees: 5, max_depth: 6, ..TreeEnsembleConfig::random_forest() }),
    ]
}

/// Exact roundtrips of models, records and headers, and identical outputs of
/// MC, the generator and the trainers under fixed seeds.
pub fn roundtrips_and_determinism(scratch: &Path) -> Result<Vec<String>, String> {
    let mut failures = Vec::new();
    let gen_cfg = GeneratorConfig::new(300, 11);
    let (records, _) = generate(&gen_cfg).map_err(err)?;
    if generate(&gen_cfg).map_err(err)?.0 != records {
        failures.push("dataset generation".to_string());
    }
    for r in &records {
        if DatasetRecord::from_json_line(&r.to_json_line()).map_err(err)? != *r {
            failures.push("record roundtrip".to_string());
            break;
        }
    }
    let header = DatasetHeader::new(&gen_cfg);
    let back: DatasetHeader = serde_json::from_str(&serde_json::to_string(&header).map_err(err)?).map_err(err)?;
    if back != header {
        failures.push("header roundtrip".to_string());
    }
    let mc = McConfig { paths: 20_000, ..McConfig::default() };
    for (name, m) in reference_models() {
        let o = reference_option(OptionKind::Digital);
        if mc_price(&o, &m, &mc).map_err(err)? != mc_price(&o, &m, &mc).map_err(err)? {
            failures.push(format!("{name} monte carlo"));
        }
    }
    let set = TrainingSet::from_records(&records).map_err(err)?;
    std::fs::create_dir_all(scratch).map_err(err)?;
    for cfg in small_configs() {
        let a = SurrogateModel::train(&set, cfg.clone()).map_err(err)?;
        let label = a.algorithm().as_str();
        if SurrogateModel::train(&set, cfg).map_err(err)? != a {
            failures.push(format!("{label} training"));
        }
        let path = scratch.join(format!("roundtrip-{label}.json"));
        a.save(&path).map_err(err)?;
        if SurrogateModel::load(&path).map_err(err)? != a {
            failures.push(format!("{label} save/load"));
        }
    }
    Ok(failures)
}

pub fn property_suites(scratch: &Path) -> Check {
    let martingale = martingale_defect(1000, 5)?;
    let gradient = gradient_check(3)?;
    let ols = ols_oracle_gap(50, 8)?;
    let failures = roundtrips_and_determinism(scratch)?;
    let pass = martingale <= 1e-9 && gradient < 1e-4 && ols <= 1e-5 && failures.is_empty();
    Ok((
        pass,
        format!(
            "martingale defect {martingale:.1e} over 1000 draws (limit 1e-9); gradient check {gradient:.1e} (limit 1e-4); \
             ols vs grid search {ols:.1e} (limit 1e-5); roundtrip/determinism failures {failures:?}"
        ),
    ))
}
