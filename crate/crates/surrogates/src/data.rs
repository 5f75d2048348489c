//! In-memory training sets built from dataset records.

use sha2::{Digest, Sha256};
use soa_core::dataset::{DatasetRecord, FeatureVector, FEATURES};

use crate::error::{Result, SurrogateError};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    pub x: Vec<FeatureVector>,
    pub y: Vec<f64>,
}

impl TrainingSet {
    pub fn new(x: Vec<FeatureVector>, y: Vec<f64>) -> Result<Self> {
        if x.len() != y.len() {
            return Err(SurrogateError::InvalidInput(format!("{} feature rows but {} targets", x.len(), y.len())));
        }
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(SurrogateError::InvalidInput(format!("target {i} is not finite")));
        }
        for (i, row) in x.iter().enumerate() {
            validate_features(row).map_err(|e| SurrogateError::InvalidInput(format!("row {i}: {e}")))?;
        }
        Ok(TrainingSet { x, y })
    }

    pub fn from_records(records: &[DatasetRecord]) -> Result<Self> {
        Self::new(records.iter().map(|r| r.features).collect(), records.iter().map(|r| r.y).collect())
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn subset(&self, rows: &[usize]) -> TrainingSet {
        TrainingSet { x: rows.iter().map(|&i| self.x[i]).collect(), y: rows.iter().map(|&i| self.y[i]).collect() }
    }

    pub fn mean_target(&self) -> f64 {
        pairwise_sum(&self.y) / self.len() as f64
    }

    /// SHA-256 over the little-endian bytes of every feature and target.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (row, y) in self.x.iter().zip(&self.y) {
            for v in row {
                h.update(v.to_le_bytes());
            }
            h.update(y.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Slot count, finiteness and a binary option-type flag.
pub fn validate_features(x: &[f64]) -> Result<()> {
    if x.len() != FEATURES {
        return Err(SurrogateError::InvalidInput(format!("expected {FEATURES} features, got {}", x.len())));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(SurrogateError::InvalidInput(format!("feature {i} is not finite")));
    }
    if x[0] != 0.0 && x[0] != 1.0 {
        return Err(SurrogateError::InvalidInput(format!("OpType {} is not binary", x[0])));
    }
    Ok(())
}

pub fn mse(predicted: &[f64], actual: &[f64]) -> f64 {
    let sq: Vec<f64> = predicted.iter().zip(actual).map(|(p, a)| (p - a) * (p - a)).collect();
    pairwise_sum(&sq) / sq.len() as f64
}

/// Summation order fixed by halving, independent of how callers split work.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        return xs.iter().sum();
    }
    let (a, b) = xs.split_at(xs.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}
