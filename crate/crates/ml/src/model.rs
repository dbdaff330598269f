//! Model specifications with validated hyperparameters, and fitted models.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::knn::KnnModel;
use crate::linear::LinearModel;
use crate::scale::Standardiser;
use crate::tree::{BoostingParams, GradientBoosting, RandomForest, RegressionTree, TreeParams};
use crate::MlError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Linear,
    Knn,
    DecisionTree,
    RandomForest,
    GradientBoosting,
}

impl ModelKind {
    pub const ALL: [ModelKind; 5] = [
        ModelKind::Linear,
        ModelKind::Knn,
        ModelKind::DecisionTree,
        ModelKind::RandomForest,
        ModelKind::GradientBoosting,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Linear => "linear",
            ModelKind::Knn => "knn",
            ModelKind::DecisionTree => "decision_tree",
            ModelKind::RandomForest => "random_forest",
            ModelKind::GradientBoosting => "gradient_boosting",
        }
    }

    /// Default hyperparameters. `max_depth = 0` means unlimited.
    pub fn defaults(self) -> BTreeMap<String, f64> {
        let pairs: &[(&str, f64)] = match self {
            ModelKind::Linear => &[("ridge", 0.0)],
            ModelKind::Knn => &[("k", 15.0), ("p", 1.0)],
            ModelKind::DecisionTree => &[
                ("max_depth", 4.0),
                ("min_samples_leaf", 3.0),
                ("min_impurity_decrease", 0.001),
            ],
            ModelKind::RandomForest => &[
                ("n_estimators", 500.0),
                ("max_depth", 0.0),
                ("min_samples_leaf", 5.0),
                ("max_features", 0.7),
            ],
            ModelKind::GradientBoosting => &[
                ("n_estimators", 800.0),
                ("learning_rate", 0.01),
                ("max_depth", 2.0),
                ("subsample", 0.7),
                ("min_samples_leaf", 3.0),
            ],
        };
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = MlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        let kind = match key.as_str() {
            "linear" | "ols" => ModelKind::Linear,
            "knn" => ModelKind::Knn,
            "decision_tree" | "dt" => ModelKind::DecisionTree,
            "random_forest" | "rf" => ModelKind::RandomForest,
            "gradient_boosting" | "gb" => ModelKind::GradientBoosting,
            _ => return Err(MlError::UnknownModel(s.to_string())),
        };
        Ok(kind)
    }
}

/// A model kind with a full, validated hyperparameter map and its seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec")]
pub struct ModelSpec {
    kind: ModelKind,
    hyperparameters: BTreeMap<String, f64>,
    rng_seed: u64,
}

#[derive(Deserialize)]
struct RawSpec {
    kind: ModelKind,
    #[serde(default)]
    hyperparameters: BTreeMap<String, f64>,
    #[serde(default)]
    rng_seed: u64,
}

impl TryFrom<RawSpec> for ModelSpec {
    type Error = MlError;

    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        ModelSpec::new(raw.kind, raw.hyperparameters, raw.rng_seed)
    }
}

fn bad(kind: ModelKind, message: String) -> MlError {
    MlError::Hyperparameter {
        model: kind.name(),
        message,
    }
}

impl ModelSpec {
    /// Overrides are merged over the defaults; unknown names and out-of-range
    /// values are rejected.
    pub fn new(kind: ModelKind, overrides: BTreeMap<String, f64>, rng_seed: u64) -> Result<Self, MlError> {
        let mut hp = kind.defaults();
        for (name, value) in overrides {
            if !hp.contains_key(&name) {
                return Err(bad(kind, format!("unknown hyperparameter `{name}`")));
            }
            if !value.is_finite() {
                return Err(bad(kind, format!("`{name}` must be finite")));
            }
            hp.insert(name, value);
        }
        for (name, &v) in &hp {
            let integer = matches!(name.as_str(), "k" | "max_depth" | "min_samples_leaf" | "n_estimators");
            if integer && (v.fract() != 0.0 || v < 0.0) {
                return Err(bad(kind, format!("`{name}` must be a non-negative integer, got {v}")));
            }
            let ok = match name.as_str() {
                "ridge" | "min_impurity_decrease" => v >= 0.0,
                "k" | "min_samples_leaf" | "n_estimators" => v >= 1.0,
                "p" => v >= 1.0,
                "max_depth" => kind != ModelKind::GradientBoosting && kind != ModelKind::DecisionTree || v >= 1.0,
                "max_features" | "subsample" => v > 0.0 && v <= 1.0,
                "learning_rate" => v > 0.0,
                _ => true,
            };
            if !ok {
                return Err(bad(kind, format!("`{name}` out of range: {v}")));
            }
        }
        Ok(Self {
            kind,
            hyperparameters: hp,
            rng_seed,
        })
    }

    pub fn default_for(kind: ModelKind) -> Self {
        Self {
            kind,
            hyperparameters: kind.defaults(),
            rng_seed: 0,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.rng_seed = seed;
        self
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn rng_seed(&self) -> u64 {
        self.rng_seed
    }

    pub fn hyperparameters(&self) -> &BTreeMap<String, f64> {
        &self.hyperparameters
    }

    fn get(&self, name: &str) -> f64 {
        self.hyperparameters[name]
    }

    fn count(&self, name: &str) -> usize {
        self.get(name) as usize
    }

    fn depth(&self) -> Option<usize> {
        Some(self.count("max_depth")).filter(|&d| d > 0)
    }

    /// Smallest training set the model accepts.
    pub fn min_rows(&self) -> usize {
        match self.kind {
            ModelKind::Knn => self.count("k").max(5),
            _ => 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Linear(LinearModel),
    Knn(KnnModel),
    DecisionTree(RegressionTree),
    RandomForest(RandomForest),
    GradientBoosting(GradientBoosting),
}

impl TrainedModel {
    pub fn predict(&self, row: &[f64]) -> f64 {
        match self {
            TrainedModel::Linear(m) => m.predict(row),
            TrainedModel::Knn(m) => m.predict(row),
            TrainedModel::DecisionTree(m) => m.predict(row),
            TrainedModel::RandomForest(m) => m.predict(row),
            TrainedModel::GradientBoosting(m) => m.predict(row),
        }
    }

    pub fn predict_many(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Standardisation fitted on the training rows, for the scaled models.
    pub fn scaler(&self) -> Option<&Standardiser> {
        match self {
            TrainedModel::Linear(m) => Some(&m.scaler),
            TrainedModel::Knn(m) => Some(&m.scaler),
            _ => None,
        }
    }
}

/// Fit `spec` on `(x, y)`.
pub fn fit(spec: &ModelSpec, x: &[Vec<f64>], y: &[f64]) -> Result<TrainedModel, MlError> {
    let needed = spec.min_rows();
    if y.len() < needed || x.len() != y.len() {
        return Err(MlError::TooFewRows {
            needed,
            got: x.len().min(y.len()),
        });
    }
    let p = x[0].len();
    for (row, r) in x.iter().enumerate() {
        if r.len() != p {
            return Err(MlError::Shape {
                row,
                got: r.len(),
                expected: p,
            });
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(MlError::NonFinite("features"));
        }
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(MlError::NonFinite("target"));
    }

    let seed = spec.rng_seed;
    let model = match spec.kind {
        ModelKind::Linear => TrainedModel::Linear(LinearModel::fit(x, y, spec.get("ridge"))),
        ModelKind::Knn => TrainedModel::Knn(KnnModel::fit(x, y, spec.count("k"), spec.get("p"))),
        ModelKind::DecisionTree => {
            let params = TreeParams {
                max_depth: spec.depth(),
                min_samples_leaf: spec.count("min_samples_leaf"),
                max_features: None,
                min_impurity_decrease: spec.get("min_impurity_decrease"),
            };
            let rows: Vec<usize> = (0..y.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            TrainedModel::DecisionTree(RegressionTree::fit(x, y, &rows, params, &mut rng))
        }
        ModelKind::RandomForest => {
            let params = TreeParams {
                max_depth: spec.depth(),
                min_samples_leaf: spec.count("min_samples_leaf"),
                max_features: Some(spec.get("max_features")),
                min_impurity_decrease: 0.0,
            };
            TrainedModel::RandomForest(RandomForest::fit(x, y, spec.count("n_estimators"), params, true, seed))
        }
        ModelKind::GradientBoosting => {
            let params = BoostingParams {
                n_rounds: spec.count("n_estimators"),
                learning_rate: spec.get("learning_rate"),
                subsample: spec.get("subsample"),
                tree: TreeParams {
                    max_depth: spec.depth(),
                    min_samples_leaf: spec.count("min_samples_leaf"),
                    max_features: None,
                    min_impurity_decrease: 0.0,
                },
            };
            TrainedModel::GradientBoosting(GradientBoosting::fit(x, y, params, seed))
        }
    };
    Ok(model)
}
