//! Checks on the generated dataset and the trained surrogates.

use std::path::{Path, PathBuf};

use soa_cli::bench::{obo_prices, Workload};
use soa_cli::data::{DESK_EPOCHS, DESK_LEARNING_RATE};
use soa_core::bench::{abs_rel_errors, RELATIVE_FLOOR};
use soa_core::dataset::{generate_to_file, read_dataset, validate_record, DatasetHeader, DatasetRecord, GeneratorConfig};
use soa_core::{closed_form_bs, ModelSpec, QuadratureConfig};
use soa_surrogates::{MlpArchitecture, SurrogateModel, TrainConfig, TrainingConfig, TrainingSet, TreeEnsembleConfig};

use crate::{err, mean, timed};

type Check = Result<(bool, String), String>;

pub const DATASET_SIZE: usize = 210_000;
pub const DATASET_SEED: u64 = 20_240_601;
pub const TEST_SIZE: usize = 10_000;
pub const VALIDITY_SIZE: usize = 100_000;

pub fn desk_config() -> GeneratorConfig {
    GeneratorConfig::new(DATASET_SIZE, DATASET_SEED)
}

/// The desk dataset, regenerated only when the cached file's header differs.
pub fn desk_dataset(cache_dir: &Path) -> Result<Vec<DatasetRecord>, String> {
    let cfg = desk_config();
    let path: PathBuf = cache_dir.join(format!("desk-{DATASET_SIZE}-{DATASET_SEED}.jsonl"));
    if path.exists() {
        if let Ok((Some(h), records)) = read_dataset(&path) {
            if h == DatasetHeader::new(&cfg) {
                return Ok(records);
            }
        }
    }
    std::fs::create_dir_all(cache_dir).map_err(err)?;
    let partial = path.with_extension("partial");
    generate_to_file(&cfg, &partial).map_err(err)?;
    std::fs::rename(&partial, &path).map_err(err)?;
    read_dataset(&path).map(|(_, r)| r).map_err(err)
}

/// Bounds, GBM labels against Black-Scholes and the OpType balance on the
/// first 10^5 records.
pub fn dataset_validity(records: &[DatasetRecord]) -> Check {
    if records.len() < VALIDITY_SIZE {
        return Err(format!("only {} records available", records.len()));
    }
    let recs = &records[..VALIDITY_SIZE];
    let bounds = desk_config().bounds;
    let invalid = recs.iter().filter(|r| validate_record(r, &bounds).is_err()).count();
    let (mut worst, mut gbm, mut below_floor) = (0.0f64, 0, 0);
    for r in recs {
        let (o, m) = r.contract().map_err(err)?;
        let ModelSpec::Gbm { sigma } = m else { continue };
        gbm += 1;
        let exact = closed_form_bs(&o, sigma) / o.scale();
        if exact < RELATIVE_FLOOR {
            below_floor += 1;
            continue;
        }
        worst = worst.max(1e4 * (r.y / exact - 1.0).abs());
    }
    let op_mean = mean(&recs.iter().map(|r| r.features[0]).collect::<Vec<_>>());
    let pass = invalid == 0 && worst <= 2.0 && (op_mean - 0.5).abs() <= 0.01;
    Ok((
        pass,
        format!(
            "{invalid} of {VALIDITY_SIZE} out of bounds; worst GBM label error {worst:.3} bps over {} records \
             ({below_floor} below the relative floor), limit 2 bps; OpType mean {op_mean:.4}",
            gbm - below_floor
        ),
    ))
}

pub struct Surrogates {
    pub models: Vec<(String, SurrogateModel)>,
    pub test: Workload,
    pub n_train: usize,
}

/// Train the three surrogates on all but the last 10^4 records.
pub fn train_surrogates(records: &[DatasetRecord]) -> Result<(Surrogates, String), String> {
    if records.len() <= TEST_SIZE {
        return Err(format!("only {} records available", records.len()));
    }
    let (train, test) = records.split_at(records.len() - TEST_SIZE);
    let set = TrainingSet::from_records(train).map_err(err)?;
    let desk_mlp = TrainingConfig::Nn {
        arch: MlpArchitecture::default(),
        train: TrainConfig { epochs: DESK_EPOCHS, learning_rate: DESK_LEARNING_RATE, ..TrainConfig::default() },
    };
    let configs = [
        ("nn", desk_mlp),
        ("gbdt", TrainingConfig::Trees(TreeEnsembleConfig::gradient_boosting())),
        ("rf", TrainingConfig::Trees(TreeEnsembleConfig::random_forest())),
    ];
    let mut models = Vec::new();
    let mut times = Vec::new();
    for (label, cfg) in configs {
        let start = std::time::Instant::now();
        models.push((label.to_string(), SurrogateModel::train(&set, cfg).map_err(err)?));
        times.push(format!("{label} {:.0} s", start.elapsed().as_secs_f64()));
    }
    let test = Workload::from_records(test).map_err(err)?;
    Ok((Surrogates { models, test, n_train: train.len() }, times.join(", ")))
}

/// Held-out relative error: MLP and GBDT within 50 bps, RF within 100 bps.
pub fn surrogate_quality(s: &Surrogates, train_times: &str) -> Check {
    let mut pass = true;
    let mut parts = Vec::new();
    for (label, model) in &s.models {
        let limit = if label == "rf" { 100.0 } else { 50.0 };
        let e = abs_rel_errors(&model.predict_batch(&s.test.features).map_err(err)?, &s.test.labels).map_err(err)?;
        pass &= e.relative_bps() <= limit;
        parts.push(format!("{label} {:.1} bps (abs {:.2e}, limit {limit})", e.relative_bps(), e.absolute));
    }
    Ok((pass, format!("{}; {} train / {} test; training {train_times}", parts.join(", "), s.n_train, s.test.len())))
}

/// Per-option inference against tuned SOA-OBO on the test workload.
pub fn surrogate_speed(s: &Surrogates) -> Check {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().map_err(err)?;
    pool.install(|| {
        let soa = QuadratureConfig::soa_tuned();
        let t_soa = mean(&timed("soa-obo", || obo_prices(&s.test.contracts, &soa), 5)?);
        let mut t = Vec::new();
        for (label, model) in &s.models {
            t.push((label.as_str(), mean(&timed(label, || model.predict_batch(&s.test.features), 5)?)));
        }
        let get = |l: &str| t.iter().find(|p| p.0 == l).map(|p| p.1).unwrap();
        let (nn, gbdt, rf) = (get("nn"), get("gbdt"), get("rf"));
        let pass = t_soa / nn >= 5.0 && t_soa / gbdt >= 5.0 && nn < gbdt && gbdt < rf;
        let per = |x: f64| 1e6 * x / s.test.len() as f64;
        Ok((
            pass,
            format!(
                "per option: soa-obo {:.2} us, nn {:.2} us ({:.1}x), gbdt {:.2} us ({:.1}x), rf {:.2} us ({:.1}x); \
                 limits 5x for nn and gbdt, nn < gbdt < rf",
                per(t_soa),
                per(nn),
                t_soa / nn,
                per(gbdt),
                t_soa / gbdt,
                per(rf),
                t_soa / rf
            ),
        ))
    })
}
