//! Regression harness for story-level creativity ratings.
//!
//! Feature tables from `storynet-core` are assembled into seven predictor
//! configurations and evaluated with five regressors under shuffled k-fold
//! cross-validation. A column-permutation baseline gives the chance level and
//! Monte-Carlo Shapley sampling explains individual predictions.

pub mod cv;
pub mod dataset;
pub mod knn;
pub mod linear;
pub mod matrix;
pub mod model;
pub mod scale;
pub mod seeds;
pub mod shapley;
pub mod synthetic;
pub mod tree;

use thiserror::Error;

pub use cv::{kfold_cv, permutation_baseline, EvalResult, FoldMetrics};
pub use dataset::{Dataset, FeatureConfig, StoryFeatures};
pub use matrix::{cell_dataset, cell_seeds, run_matrix, MatrixOutcome, MatrixSpec};
pub use model::{fit, ModelKind, ModelSpec, TrainedModel};
pub use shapley::{shapley_attribution, Attribution};

#[derive(Debug, Error, PartialEq)]
pub enum MlError {
    #[error("invalid hyperparameter for {model}: {message}")]
    Hyperparameter { model: &'static str, message: String },
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("row {row} has {got} features, expected {expected}")]
    Shape { row: usize, got: usize, expected: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("unknown feature configuration `{0}`")]
    UnknownConfig(String),
    #[error("unknown model kind `{0}`")]
    UnknownModel(String),
    #[error("target `{0}` is not available")]
    MissingTarget(String),
    #[error("no feature rows for builder {0}")]
    MissingBuilder(String),
    #[error("n_samples must be at least {min}, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error(transparent)]
    Stats(#[from] storynet_core::stats::StatsError),
}
