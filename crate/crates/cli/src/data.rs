//! `gen-data`, `train` and `predict`.

use std::path::{Path, PathBuf};

use clap::Args;
use serde::{Deserialize, Serialize};
use soa_core::dataset::{
    generate_to_file, read_dataset, rescale_price, FeatureVector, GeneratorConfig, Labeler, ModelMix,
    FEATURES, FEATURE_NAMES,
};
use soa_surrogates::ensemble::{cross_validate_depth, TreeEnsembleConfig};
use soa_surrogates::mlp::{MlpArchitecture, TrainConfig};
use soa_surrogates::{Algorithm, EnsembleKind, SurrogateModel, TrainingConfig, TrainingSet};

use crate::config::{layered, required};
use crate::{fmt17, with_suffix, write_text, CliError, Outcome, Result};

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct GenDataArgs {
    /// Number of records.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// uniform, gbm, heston or evgp.
    #[arg(long)]
    pub mix: Option<String>,
    /// adaptive, or fixed with --B and --N.
    #[arg(long)]
    pub labeler: Option<String>,
    #[arg(long = "B")]
    pub grid_b: Option<f64>,
    #[arg(long = "N")]
    pub grid_n: Option<usize>,
}

pub fn gen_data(flags: &GenDataArgs, section: Option<&toml::Value>) -> Result<Outcome> {
    let defaults = GenDataArgs {
        seed: Some(0),
        mix: Some("uniform".into()),
        labeler: Some("adaptive".into()),
        ..GenDataArgs::default()
    };
    let a = layered(&defaults, section, flags)?;
    let n = required(&a.n, "n")?;
    let seed = required(&a.seed, "seed")?;
    let out = required(&a.out, "out")?;
    let mix: ModelMix = required(&a.mix, "mix")?.parse()?;
    let labeler = match required(&a.labeler, "labeler")?.as_str() {
        "adaptive" => Labeler::default(),
        "fixed" => Labeler::fixed(a.grid_b.unwrap_or(40.0), a.grid_n.unwrap_or(64)),
        other => return Err(CliError::Validation(format!("unknown labeler {other:?}"))),
    };
    let cfg = GeneratorConfig { mix, labeler, ..GeneratorConfig::new(n, seed) };
    let summary = generate_to_file(&cfg, &out)?;
    println!("written={} skipped={} unconverged={}", summary.written, summary.skipped, summary.unconverged);
    let mut outcome = Outcome::new(&a)?;
    outcome.config["generator"] = serde_json::to_value(&cfg)?;
    outcome.seeds.push(seed);
    outcome.outputs.push(out);
    Ok(outcome)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct TrainArgs {
    /// nn, rf or gbdt.
    #[arg(long)]
    pub algo: Option<String>,
    /// Dataset file written by gen-data.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Model file to write.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Use only the first records of the dataset.
    #[arg(long)]
    pub limit: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// full (3000-epoch schedule) or desk (raised learning rate, 300 epochs).
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub decay_factor: Option<f64>,
    #[arg(long)]
    pub decay_every: Option<usize>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub n_trees: Option<usize>,
    #[arg(long)]
    pub max_depth: Option<usize>,
    #[arg(long)]
    pub subsample: Option<f64>,
    #[arg(long)]
    pub shrinkage: Option<f64>,
    #[arg(long)]
    pub bins: Option<usize>,
    #[arg(long)]
    pub min_leaf: Option<usize>,
    /// Comma-separated depth grid; picks max_depth by cross-validation.
    #[arg(long)]
    pub cv_depths: Option<String>,
    #[arg(long)]
    pub folds: Option<usize>,
}

/// Learning rate of the desk preset, for 2×10⁵ records and a few hundred epochs.
pub const DESK_LEARNING_RATE: f64 = 1e-2;
pub const DESK_EPOCHS: usize = 300;

fn train_defaults(algo: Algorithm, preset: &str) -> Result<TrainArgs> {
    let mut d = TrainArgs { seed: Some(0), folds: Some(3), ..TrainArgs::default() };
    match algo {
        Algorithm::Nn => {
            let t = TrainConfig::default();
            let (epochs, lr) = match preset {
                "full" => (t.epochs, t.learning_rate),
                "desk" => (DESK_EPOCHS, DESK_LEARNING_RATE),
                other => return Err(CliError::Validation(format!("unknown preset {other:?}"))),
            };
            d.epochs = Some(epochs);
            d.learning_rate = Some(lr);
            d.batch_size = Some(t.batch_size);
            d.decay_factor = Some(t.decay_factor);
            d.decay_every = Some(t.decay_every);
            d.alpha = Some(MlpArchitecture::default().alpha);
        }
        Algorithm::Rf | Algorithm::Gbdt => {
            let kind = if algo == Algorithm::Rf { EnsembleKind::RandomForest } else { EnsembleKind::GradientBoosting };
            let c = TreeEnsembleConfig::for_kind(kind);
            d.n_trees = Some(c.n_trees);
            d.max_depth = Some(c.max_depth);
            d.subsample = Some(c.subsample);
            d.shrinkage = Some(c.shrinkage);
            d.bins = Some(c.bins);
            d.min_leaf = Some(c.min_leaf);
        }
    }
    Ok(d)
}

fn load_training_set(path: &Path, limit: Option<usize>) -> Result<TrainingSet> {
    let (_, mut records) = read_dataset(path)?;
    if let Some(l) = limit {
        records.truncate(l);
    }
    if records.is_empty() {
        return Err(CliError::Validation(format!("{} holds no records", path.display())));
    }
    Ok(TrainingSet::from_records(&records)?)
}

fn parse_depths(s: &str) -> Result<Vec<usize>> {
    s.split(',')
        .map(|d| d.trim().parse::<usize>().map_err(|e| CliError::Validation(format!("depth {d:?}: {e}"))))
        .collect()
}

pub fn train(flags: &TrainArgs, section: Option<&toml::Value>) -> Result<Outcome> {
    // the algorithm and preset pick the defaults, so resolve them first
    let head = layered(&TrainArgs { preset: Some("full".into()), ..TrainArgs::default() }, section, flags)?;
    let algo: Algorithm = required(&head.algo, "algo")?.parse()?;
    let preset = required(&head.preset, "preset")?;
    let defaults = TrainArgs { algo: head.algo.clone(), preset: Some(preset.clone()), ..train_defaults(algo, &preset)? };
    let a = layered(&defaults, section, flags)?;
    let data = required(&a.data, "data")?;
    let out = required(&a.out, "out")?;
    let set = load_training_set(&data, a.limit)?;
    let seed = required(&a.seed, "seed")?;
    let mut outputs = vec![out.clone()];
    let mut resolved = a.clone();
    let config = match algo {
        Algorithm::Nn => TrainingConfig::Nn {
            arch: MlpArchitecture { alpha: required(&a.alpha, "alpha")?, ..MlpArchitecture::default() },
            train: TrainConfig {
                batch_size: required(&a.batch_size, "batch-size")?,
                epochs: required(&a.epochs, "epochs")?,
                learning_rate: required(&a.learning_rate, "learning-rate")?,
                decay_factor: required(&a.decay_factor, "decay-factor")?,
                decay_every: required(&a.decay_every, "decay-every")?,
                seed,
            },
        },
        Algorithm::Rf | Algorithm::Gbdt => {
            let kind = if algo == Algorithm::Rf { EnsembleKind::RandomForest } else { EnsembleKind::GradientBoosting };
            let mut cfg = TreeEnsembleConfig {
                kind,
                n_trees: required(&a.n_trees, "n-trees")?,
                max_depth: required(&a.max_depth, "max-depth")?,
                subsample: required(&a.subsample, "subsample")?,
                shrinkage: required(&a.shrinkage, "shrinkage")?,
                bins: required(&a.bins, "bins")?,
                min_leaf: required(&a.min_leaf, "min-leaf")?,
                seed,
            };
            cfg.validate()?;
            if let Some(depths) = &a.cv_depths {
                let search = cross_validate_depth(&set, &cfg, &parse_depths(depths)?, required(&a.folds, "folds")?)?;
                let mut text = String::from("max_depth,cv_mse\n");
                for (d, l) in &search.losses {
                    text.push_str(&format!("{d},{}\n", fmt17(*l)));
                }
                let path = with_suffix(&out, ".cv.csv");
                write_text(&path, &text)?;
                outputs.push(path);
                println!("cv best max_depth={}", search.best_depth);
                cfg.max_depth = search.best_depth;
                resolved.max_depth = Some(search.best_depth);
            }
            TrainingConfig::Trees(cfg)
        }
    };
    let model = SurrogateModel::train(&set, config)?;
    model.save(&out)?;
    let mut loss = String::from("step,loss\n");
    for (i, l) in model.metadata.loss_trace.iter().enumerate() {
        loss.push_str(&format!("{i},{}\n", fmt17(*l)));
    }
    let loss_path = with_suffix(&out, ".loss.csv");
    write_text(&loss_path, &loss)?;
    outputs.push(loss_path);
    println!("algo={} records={} final_loss={}", algo.as_str(), set.len(), fmt17(model.metadata.final_loss));
    let mut outcome = Outcome::new(&resolved)?;
    outcome.config["data_hash"] = model.metadata.data_hash.clone().into();
    outcome.seeds.push(seed);
    outcome.outputs = outputs;
    Ok(outcome)
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
pub struct PredictArgs {
    /// Model file written by train.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// JSON-lines file of feature objects (dataset files work too).
    #[arg(long = "in")]
    pub input: Option<PathBuf>,
    /// Spot used to rescale European prices; otherwise each row's s0_raw, else 1.
    #[arg(long)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Feature rows and optional spots from a JSON-lines file; header lines are skipped.
pub fn read_features(path: &Path) -> Result<Vec<(FeatureVector, Option<f64>)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let v: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), i + 1)))?;
        if v.get("header").is_some() || v.get("generator_version").is_some() {
            continue;
        }
        let mut x = [0.0; FEATURES];
        for (slot, name) in x.iter_mut().zip(FEATURE_NAMES) {
            *slot = v.get(name).and_then(|f| f.as_f64()).ok_or_else(|| {
                CliError::Validation(format!("{}:{}: missing numeric feature {name}", path.display(), i + 1))
            })?;
        }
        rows.push((x, v.get("s0_raw").and_then(|s| s.as_f64())));
    }
    Ok(rows)
}

pub fn predict(flags: &PredictArgs, section: Option<&toml::Value>) -> Result<Outcome> {
    let a = layered(&PredictArgs::default(), section, flags)?;
    let model = SurrogateModel::load(&required(&a.model, "model")?)?;
    let rows = read_features(&required(&a.input, "in")?)?;
    let xs: Vec<FeatureVector> = rows.iter().map(|r| r.0).collect();
    let preds = model.predict_batch(&xs)?;
    let mut text = String::from("row,normalized_price,price\n");
    for (i, ((x, s0_row), p)) in rows.iter().zip(&preds).enumerate() {
        let s0 = a.s0.or(*s0_row).unwrap_or(1.0);
        text.push_str(&format!("{i},{},{}\n", fmt17(*p), fmt17(rescale_price(*p, s0, x[0]))));
    }
    let mut outcome = Outcome::new(&a)?;
    outcome.config["model_data_hash"] = model.metadata.data_hash.clone().into();
    match &a.out {
        Some(out) => {
            write_text(out, &text)?;
            outcome.outputs.push(out.clone());
        }
        None => print!("{text}"),
    }
    Ok(outcome)
}
