//! Full cross-product of targets, builders, feature configurations and models.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use storynet_core::BuilderTag;

use crate::cv::{kfold_cv, permutation_baseline, EvalResult, DEFAULT_FOLDS};
use crate::dataset::{Dataset, FeatureConfig, StoryFeatures};
use crate::model::{ModelKind, ModelSpec};
use crate::seeds::derive_seed;
use crate::MlError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixSpec {
    /// `mean` and/or rater ids.
    pub targets: Vec<String>,
    pub builders: Vec<BuilderTag>,
    pub configs: Vec<FeatureConfig>,
    pub models: Vec<ModelSpec>,
    pub folds: usize,
    pub seed: u64,
    /// Also run the column-permutation baseline for every cell.
    pub with_baseline: bool,
}

impl MatrixSpec {
    pub fn new(targets: Vec<String>, builders: Vec<BuilderTag>, configs: Vec<FeatureConfig>, models: Vec<ModelSpec>) -> Self {
        Self {
            targets,
            builders,
            configs,
            models,
            folds: DEFAULT_FOLDS,
            seed: 0,
            with_baseline: false,
        }
    }

    pub fn cell_count(&self) -> usize {
        self.targets.len() * self.builders.len() * self.configs.len() * self.models.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixOutcome {
    pub results: Vec<EvalResult>,
    /// Permuted counterpart of `results[i]` at the same index, when requested.
    pub baselines: Vec<EvalResult>,
    /// Index into `results` of the best cell per target.
    pub best: BTreeMap<String, usize>,
}

/// Lowest mean MAE wins; equal MAE goes to the higher mean Spearman.
pub fn select_best(results: &[EvalResult]) -> BTreeMap<String, usize> {
    let mut best: BTreeMap<String, usize> = BTreeMap::new();
    for (i, r) in results.iter().enumerate() {
        let key = r.target.clone().unwrap_or_default();
        let better = match best.get(&key) {
            None => true,
            Some(&j) => {
                let b = &results[j];
                r.mean_mae < b.mean_mae || (r.mean_mae == b.mean_mae && r.mean_spearman > b.mean_spearman)
            }
        };
        if better {
            best.insert(key, i);
        }
    }
    best
}

/// Rows of one (builder, config) table: stories with features under
/// `builder` and a value in `values`, in feature order.
pub fn cell_dataset(
    features: &[StoryFeatures],
    values: &BTreeMap<String, f64>,
    builder: BuilderTag,
    config: FeatureConfig,
) -> Result<Dataset, MlError> {
    let rows: Vec<&StoryFeatures> = features
        .iter()
        .filter(|f| f.builder == builder && values.contains_key(&f.story_id))
        .collect();
    if rows.is_empty() {
        return Err(MlError::MissingBuilder(builder.to_string()));
    }
    Dataset::new(
        rows.iter().map(|f| f.story_id.clone()).collect(),
        config.feature_names(),
        rows.iter().map(|f| f.assemble(config)).collect(),
        rows.iter().map(|f| values[&f.story_id]).collect(),
    )
}

/// Fold seed and model seed of one cell. Folds depend on the target only,
/// so every cell of a target is scored on the same partition.
pub fn cell_seeds(master: u64, target: &str, builder: BuilderTag, config: FeatureConfig, model: ModelKind) -> (u64, u64) {
    let fold_seed = derive_seed(master, &format!("folds/{target}"));
    let model_seed = derive_seed(master, &format!("{target}/{builder}/{}/{model}", config.name()));
    (fold_seed, model_seed)
}

/// `targets` maps a target name to per-story values. Stories without a value
/// for a target are left out of that target's rows.
pub fn run_matrix(
    features: &[StoryFeatures],
    targets: &BTreeMap<String, BTreeMap<String, f64>>,
    spec: &MatrixSpec,
) -> Result<MatrixOutcome, MlError> {
    let mut tables = Vec::new();
    for target in &spec.targets {
        let values = targets.get(target).ok_or_else(|| MlError::MissingTarget(target.clone()))?;
        for &builder in &spec.builders {
            for &config in &spec.configs {
                tables.push((target, builder, config, cell_dataset(features, values, builder, config)?));
            }
        }
    }

    let cells: Vec<_> = tables
        .iter()
        .flat_map(|t| spec.models.iter().map(move |m| (t, m)))
        .collect();
    let evaluated: Vec<(EvalResult, Option<EvalResult>)> = cells
        .par_iter()
        .map(|((target, builder, config, data), model)| {
            let (fold_seed, model_seed) = cell_seeds(spec.seed, target, *builder, *config, model.kind());
            let model = (*model).clone().with_seed(model_seed);
            let label = |mut r: EvalResult| {
                r.target = Some((*target).clone());
                r.builder = Some(*builder);
                r.config = Some(*config);
                r
            };
            let real = label(kfold_cv(data, &model, spec.folds, fold_seed)?);
            let perm = if spec.with_baseline {
                Some(label(permutation_baseline(data, &model, spec.folds, fold_seed)?))
            } else {
                None
            };
            Ok((real, perm))
        })
        .collect::<Result<_, MlError>>()?;

    let (results, baselines): (Vec<_>, Vec<_>) = evaluated.into_iter().unzip();
    Ok(MatrixOutcome {
        best: select_best(&results),
        results,
        baselines: baselines.into_iter().flatten().collect(),
    })
}
