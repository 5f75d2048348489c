//! Trained surrogates with their training metadata, JSON persistence and
//! clamped prediction.

use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use soa_core::dataset::{rescale_price, FeatureVector};

use crate::data::{validate_features, TrainingSet};
use crate::ensemble::{fit_ensemble, EnsembleKind, TreeEnsemble, TreeEnsembleConfig};
use crate::error::{Result, SurrogateError};
use crate::mlp::{train_mlp, Mlp, MlpArchitecture, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Nn,
    Rf,
    Gbdt,
}

impl Algorithm {
    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Nn => "nn",
            Algorithm::Rf => "rf",
            Algorithm::Gbdt => "gbdt",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = SurrogateError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nn" | "mlp" => Ok(Algorithm::Nn),
            "rf" => Ok(Algorithm::Rf),
            "gbdt" => Ok(Algorithm::Gbdt),
            other => Err(SurrogateError::InvalidInput(format!("unknown algorithm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "algorithm", rename_all = "snake_case")]
pub enum TrainingConfig {
    Nn { arch: MlpArchitecture, train: TrainConfig },
    Trees(TreeEnsembleConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMetadata {
    pub config: TrainingConfig,
    pub data_hash: String,
    pub n_train: usize,
    pub final_loss: f64,
    pub loss_trace: Vec<f64>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum Regressor {
    Mlp(Mlp),
    RandomForest(TreeEnsemble),
    GradientBoosting(TreeEnsemble),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurrogateModel {
    pub regressor: Regressor,
    pub metadata: TrainingMetadata,
}

const VERSION: &str = concat!("soa-surrogates ", env!("CARGO_PKG_VERSION"));

impl SurrogateModel {
    pub fn train(set: &TrainingSet, config: TrainingConfig) -> Result<Self> {
        let (regressor, loss_trace) = match &config {
            TrainingConfig::Nn { arch, train } => {
                let t = train_mlp(set, arch.clone(), train)?;
                (Regressor::Mlp(t.mlp), t.loss_trace)
            }
            TrainingConfig::Trees(cfg) => {
                let t = fit_ensemble(set, cfg)?;
                let r = match cfg.kind {
                    EnsembleKind::RandomForest => Regressor::RandomForest(t.ensemble),
                    EnsembleKind::GradientBoosting => Regressor::GradientBoosting(t.ensemble),
                };
                (r, t.loss_trace)
            }
        };
        let metadata = TrainingMetadata {
            config,
            data_hash: set.hash(),
            n_train: set.len(),
            final_loss: loss_trace.last().copied().unwrap_or(f64::NAN),
            loss_trace,
            version: VERSION.to_string(),
        };
        Ok(SurrogateModel { regressor, metadata })
    }

    pub fn algorithm(&self) -> Algorithm {
        match self.regressor {
            Regressor::Mlp(_) => Algorithm::Nn,
            Regressor::RandomForest(_) => Algorithm::Rf,
            Regressor::GradientBoosting(_) => Algorithm::Gbdt,
        }
    }

    /// Unclamped regressor output for a validated feature vector.
    pub fn raw(&self, x: &FeatureVector) -> Result<f64> {
        validate_features(x)?;
        Ok(match &self.regressor {
            Regressor::Mlp(m) => m.forward(x)?,
            Regressor::RandomForest(e) | Regressor::GradientBoosting(e) => e.predict(x),
        })
    }

    /// Normalized price clamped to `[0, 1]`.
    pub fn predict(&self, x: &FeatureVector) -> Result<f64> {
        Ok(self.raw(x)?.clamp(0.0, 1.0))
    }

    pub fn predict_batch(&self, xs: &[FeatureVector]) -> Result<Vec<f64>> {
        for (i, x) in xs.iter().enumerate() {
            validate_features(x).map_err(|e| SurrogateError::InvalidInput(format!("row {i}: {e}")))?;
        }
        let raw = match &self.regressor {
            Regressor::Mlp(m) => m.forward_batch(xs.as_flattened(), xs.len())?,
            Regressor::RandomForest(e) | Regressor::GradientBoosting(e) => e.predict_batch(xs),
        };
        Ok(raw.into_iter().map(|v| v.clamp(0.0, 1.0)).collect())
    }

    /// Price in currency units for spot `s0`.
    pub fn predict_actual(&self, x: &FeatureVector, s0: f64) -> Result<f64> {
        if !(s0 > 0.0) || !s0.is_finite() {
            return Err(SurrogateError::InvalidInput(format!("spot must be positive, got {s0}")));
        }
        Ok(rescale_price(self.predict(x)?, s0, x[0]))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(&mut w, self)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Ok(serde_json::from_reader(BufReader::new(std::fs::File::open(path)?))?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mlp::Layer;

    fn row(op: f64) -> FeatureVector {
        [op, 0.9, 0.5, 0.02, 0.2, -1.0, -1.0, -1.0, -1.0, -1.0]
    }

    fn constant_net(bias: f64) -> SurrogateModel {
        let mut mlp = Mlp::zeros(MlpArchitecture::default()).unwrap();
        let last: &mut Layer = mlp.layers.last_mut().unwrap();
        last.b[0] = bias;
        SurrogateModel {
            regressor: Regressor::Mlp(mlp),
            metadata: TrainingMetadata {
                config: TrainingConfig::Nn { arch: MlpArchitecture::default(), train: TrainConfig::default() },
                data_hash: String::new(),
                n_train: 0,
                final_loss: 0.0,
                loss_trace: vec![],
                version: VERSION.into(),
            },
        }
    }

    #[test]
    fn outputs_are_clamped() {
        let m = constant_net(-0.01);
        assert_eq!(m.raw(&row(1.0)).unwrap(), -0.01);
        assert_eq!(m.predict(&row(1.0)).unwrap(), 0.0);
        assert_eq!(constant_net(1.5).predict(&row(0.0)).unwrap(), 1.0);
    }

    #[test]
    fn actual_prices_rescale_europeans_only() {
        let m = constant_net(0.25);
        assert!((m.predict_actual(&row(1.0), 120.0).unwrap() - 30.0).abs() < 1e-12);
        assert_eq!(m.predict_actual(&row(0.0), 120.0).unwrap(), 0.25);
        assert!(m.predict_actual(&row(1.0), -1.0).is_err());
    }

    #[test]
    fn malformed_features_are_rejected() {
        let m = constant_net(0.25);
        assert!(m.predict(&row(0.5)).is_err());
        assert!(m.predict_batch(&[row(1.0), row(2.0)]).is_err());
    }

    #[test]
    fn algorithm_names() {
        assert_eq!("nn".parse::<Algorithm>().unwrap(), Algorithm::Nn);
        assert_eq!("gbdt".parse::<Algorithm>().unwrap().as_str(), "gbdt");
        assert!("svm".parse::<Algorithm>().is_err());
    }
}
