//! Bagged random forests, gradient boosting, and depth selection by k-fold CV.

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use soa_core::dataset::FeatureVector;

use crate::data::{mse, pairwise_sum, TrainingSet};
use crate::error::{Result, SurrogateError};
use crate::tree::{fit_tree, BinnedData, Tree, TreeParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleKind {
    RandomForest,
    GradientBoosting,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsembleConfig {
    pub kind: EnsembleKind,
    pub n_trees: usize,
    pub max_depth: usize,
    /// Fraction of rows drawn without replacement for each tree.
    pub subsample: f64,
    /// Step applied to each boosting stage; ignored by forests.
    pub shrinkage: f64,
    pub bins: usize,
    pub min_leaf: usize,
    pub seed: u64,
}

impl TreeEnsembleConfig {
    pub fn random_forest() -> Self {
        TreeEnsembleConfig {
            kind: EnsembleKind::RandomForest,
            n_trees: 100,
            max_depth: 20,
            subsample: 0.7,
            shrinkage: 0.1,
            bins: 256,
            min_leaf: 1,
            seed: 0,
        }
    }

    pub fn gradient_boosting() -> Self {
        TreeEnsembleConfig { kind: EnsembleKind::GradientBoosting, max_depth: 15, ..Self::random_forest() }
    }

    pub fn for_kind(kind: EnsembleKind) -> Self {
        match kind {
            EnsembleKind::RandomForest => Self::random_forest(),
            EnsembleKind::GradientBoosting => Self::gradient_boosting(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.n_trees >= 1
            && self.max_depth >= 1
            && self.subsample > 0.0
            && self.subsample <= 1.0
            && self.shrinkage > 0.0
            && self.shrinkage.is_finite()
            && (2..=256).contains(&self.bins)
            && self.min_leaf >= 1;
        if ok {
            Ok(())
        } else {
            Err(SurrogateError::InvalidInput(format!("malformed tree ensemble config {self:?}")))
        }
    }

    fn params(&self) -> TreeParams {
        TreeParams { max_depth: self.max_depth, min_leaf: self.min_leaf }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TreeEnsemble {
    pub kind: EnsembleKind,
    /// Prediction is `base + scale · Σ trees`.
    pub base: f64,
    pub scale: f64,
    pub trees: Vec<Tree>,
}

impl TreeEnsemble {
    pub fn predict(&self, x: &FeatureVector) -> f64 {
        let s: f64 = self.trees.iter().map(|t| t.predict(x)).sum();
        self.base + self.scale * s
    }

    /// Tree-major traversal over a batch.
    pub fn predict_batch(&self, xs: &[FeatureVector]) -> Vec<f64> {
        let mut acc = vec![0.0; xs.len()];
        for t in &self.trees {
            acc.iter_mut().zip(xs).for_each(|(a, x)| *a += t.predict(x));
        }
        acc.iter().map(|s| self.base + self.scale * s).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleTraining {
    pub ensemble: TreeEnsemble,
    /// In-sample MSE after each boosting stage; forests report the final MSE once.
    pub loss_trace: Vec<f64>,
}

fn subsample_rows(n: usize, fraction: f64, seed: u64, tree: usize) -> Vec<u32> {
    let m = ((fraction * n as f64).round() as usize).clamp(1, n);
    if m == n {
        return (0..n as u32).collect();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64 + 1);
    let mut rows: Vec<u32> = index::sample(&mut rng, n, m).into_iter().map(|i| i as u32).collect();
    rows.sort_unstable();
    rows
}

pub fn fit_ensemble(set: &TrainingSet, cfg: &TreeEnsembleConfig) -> Result<EnsembleTraining> {
    cfg.validate()?;
    if set.is_empty() {
        return Err(SurrogateError::InvalidInput("training set is empty".into()));
    }
    let data = BinnedData::new(&set.x, cfg.bins);
    match cfg.kind {
        EnsembleKind::RandomForest => Ok(fit_forest(set, &data, cfg)),
        EnsembleKind::GradientBoosting => Ok(fit_boosting(set, &data, cfg)),
    }
}

fn fit_forest(set: &TrainingSet, data: &BinnedData, cfg: &TreeEnsembleConfig) -> EnsembleTraining {
    let trees: Vec<Tree> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| fit_tree(data, &set.y, &subsample_rows(set.len(), cfg.subsample, cfg.seed, t), cfg.params()))
        .collect();
    let ensemble = TreeEnsemble { kind: EnsembleKind::RandomForest, base: 0.0, scale: 1.0 / cfg.n_trees as f64, trees };
    let fitted = ensemble.predict_batch(&set.x);
    EnsembleTraining { loss_trace: vec![mse(&fitted, &set.y)], ensemble }
}

fn fit_boosting(set: &TrainingSet, data: &BinnedData, cfg: &TreeEnsembleConfig) -> EnsembleTraining {
    let base = set.mean_target();
    let mut fitted = vec![base; set.len()];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut loss_trace = Vec::with_capacity(cfg.n_trees);
    for t in 0..cfg.n_trees {
        let resid: Vec<f64> = set.y.iter().zip(&fitted).map(|(y, f)| y - f).collect();
        let tree = fit_tree(data, &resid, &subsample_rows(set.len(), cfg.subsample, cfg.seed, t), cfg.params());
        fitted.par_iter_mut().zip(&set.x).for_each(|(f, x)| *f += cfg.shrinkage * tree.predict(x));
        loss_trace.push(mse(&fitted, &set.y));
        trees.push(tree);
    }
    let ensemble = TreeEnsemble { kind: EnsembleKind::GradientBoosting, base, scale: cfg.shrinkage, trees };
    EnsembleTraining { ensemble, loss_trace }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DepthSearch {
    pub best_depth: usize,
    /// `(depth, mean validation MSE over folds)` in grid order.
    pub losses: Vec<(usize, f64)>,
    pub folds: usize,
}

/// k-fold validation MSE for each depth; ties resolve to the smaller depth.
pub fn cross_validate_depth(
    set: &TrainingSet,
    cfg: &TreeEnsembleConfig,
    depths: &[usize],
    folds: usize,
) -> Result<DepthSearch> {
    if folds < 2 || folds > set.len() {
        return Err(SurrogateError::InvalidInput(format!("{folds} folds for {} records", set.len())));
    }
    if depths.is_empty() {
        return Err(SurrogateError::InvalidInput("empty depth grid".into()));
    }
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(cfg.seed));
    let splits: Vec<(TrainingSet, TrainingSet)> = (0..folds)
        .map(|k| {
            let (held, kept): (Vec<usize>, Vec<usize>) = (0..order.len()).partition(|i| i % folds == k);
            let pick = |ix: Vec<usize>| set.subset(&ix.into_iter().map(|i| order[i]).collect::<Vec<_>>());
            (pick(kept), pick(held))
        })
        .collect();
    let mut losses = Vec::with_capacity(depths.len());
    for &depth in depths {
        let c = TreeEnsembleConfig { max_depth: depth, ..*cfg };
        let mut fold_losses = Vec::with_capacity(folds);
        for (train, valid) in &splits {
            let model = fit_ensemble(train, &c)?.ensemble;
            fold_losses.push(mse(&model.predict_batch(&valid.x), &valid.y));
        }
        losses.push((depth, pairwise_sum(&fold_losses) / folds as f64));
    }
    let best_depth = losses.iter().fold(losses[0], |b, &l| if l.1 < b.1 { l } else { b }).0;
    Ok(DepthSearch { best_depth, losses, folds })
}
