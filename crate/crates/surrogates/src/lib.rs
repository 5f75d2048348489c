//! Surrogate regressors for normalized option prices: a leaky-rectifier MLP,
//! bagged random forests and gradient-boosted trees.

pub mod data;
pub mod ensemble;
pub mod error;
pub mod mlp;
pub mod model;
pub mod tree;

pub use data::TrainingSet;
pub use ensemble::{cross_validate_depth, fit_ensemble, DepthSearch, EnsembleKind, TreeEnsemble, TreeEnsembleConfig};
pub use error::{Result, SurrogateError};
pub use mlp::{train_mlp, Mlp, MlpArchitecture, TrainConfig};
pub use model::{Algorithm, Regressor, SurrogateModel, TrainingConfig, TrainingMetadata};
