//! Shuffled k-fold cross-validation and the column-permutation baseline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use storynet_core::stats::{mae, pearson, spearman};
use storynet_core::BuilderTag;

use crate::dataset::{Dataset, FeatureConfig};
use crate::model::{fit, ModelKind, ModelSpec, TrainedModel};
use crate::seeds::derive_seed;
use crate::MlError;

pub const DEFAULT_FOLDS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldMetrics {
    pub fold: usize,
    pub n_test: usize,
    pub mae: f64,
    /// 0 when the fold's predictions or targets are constant.
    pub spearman: f64,
    pub pearson: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutOfFold {
    pub story_id: String,
    pub truth: f64,
    pub prediction: f64,
    pub fold: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub target: Option<String>,
    pub builder: Option<BuilderTag>,
    pub config: Option<FeatureConfig>,
    pub model: ModelKind,
    pub permuted: bool,
    pub seed: u64,
    pub folds: Vec<FoldMetrics>,
    pub mean_mae: f64,
    pub mean_spearman: f64,
    pub mean_pearson: f64,
    /// Spearman over the pooled out-of-fold predictions.
    pub oof_spearman: f64,
    /// One entry per row, in dataset order.
    pub predictions: Vec<OutOfFold>,
}

/// Test-row indices per fold. Rows are shuffled with `seed` and dealt into
/// `k` contiguous blocks whose sizes differ by at most one.
pub fn fold_assignment(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, MlError> {
    if k < 2 || n < k {
        return Err(MlError::TooFewRows { needed: k.max(2), got: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / k, n % k);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for f in 0..k {
        let len = base + usize::from(f < extra);
        let mut fold = order[start..start + len].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += len;
    }
    Ok(folds)
}

fn fold_spec(spec: &ModelSpec, fold: usize) -> ModelSpec {
    spec.clone().with_seed(derive_seed(spec.rng_seed(), &format!("fold{fold}")))
}

/// Fitted model per fold together with that fold's test rows.
pub fn cv_models(
    data: &Dataset,
    spec: &ModelSpec,
    k: usize,
    seed: u64,
) -> Result<Vec<(Vec<usize>, TrainedModel)>, MlError> {
    let folds = fold_assignment(data.len(), k, seed)?;
    folds
        .into_par_iter()
        .enumerate()
        .map(|(f, test)| {
            let mut in_test = vec![false; data.len()];
            test.iter().for_each(|&i| in_test[i] = true);
            let train: Vec<usize> = (0..data.len()).filter(|&i| !in_test[i]).collect();
            let (x, y) = data.subset(&train);
            let model = fit(&fold_spec(spec, f), &x, &y)?;
            Ok((test, model))
        })
        .collect()
}

fn correlation_or_zero(r: Result<storynet_core::stats::Correlation, storynet_core::stats::StatsError>) -> f64 {
    match r {
        Ok(c) if c.defined => c.value,
        _ => 0.0,
    }
}

/// Shuffled k-fold CV. `seed` fixes the folds; the model seed comes from `spec`.
pub fn kfold_cv(data: &Dataset, spec: &ModelSpec, k: usize, seed: u64) -> Result<EvalResult, MlError> {
    let models = cv_models(data, spec, k, seed)?;
    let mut folds = Vec::with_capacity(k);
    let mut pred = vec![0.0; data.len()];
    let mut fold_of = vec![0; data.len()];
    for (f, (test, model)) in models.iter().enumerate() {
        let truth: Vec<f64> = test.iter().map(|&i| data.y[i]).collect();
        let p: Vec<f64> = test.iter().map(|&i| model.predict(&data.x[i])).collect();
        for (&i, &v) in test.iter().zip(&p) {
            pred[i] = v;
            fold_of[i] = f;
        }
        if p.iter().any(|v| !v.is_finite()) {
            return Err(MlError::NonFinite("predictions"));
        }
        folds.push(FoldMetrics {
            fold: f,
            n_test: test.len(),
            mae: mae(&p, &truth)?,
            spearman: correlation_or_zero(spearman(&p, &truth)),
            pearson: correlation_or_zero(pearson(&p, &truth)),
        });
    }
    let kf = folds.len() as f64;
    let mean = |get: fn(&FoldMetrics) -> f64| folds.iter().map(get).sum::<f64>() / kf;
    Ok(EvalResult {
        target: None,
        builder: None,
        config: None,
        model: spec.kind(),
        permuted: false,
        seed,
        mean_mae: mean(|m| m.mae),
        mean_spearman: mean(|m| m.spearman),
        mean_pearson: mean(|m| m.pearson),
        oof_spearman: correlation_or_zero(spearman(&pred, &data.y)),
        predictions: (0..data.len())
            .map(|i| OutOfFold {
                story_id: data.ids[i].clone(),
                truth: data.y[i],
                prediction: pred[i],
                fold: fold_of[i],
            })
            .collect(),
        folds,
    })
}

/// Copy of `data` with every feature column shuffled independently.
pub fn permute_columns(data: &Dataset, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = data.clone();
    for j in 0..data.n_features() {
        let mut col: Vec<f64> = data.x.iter().map(|r| r[j]).collect();
        col.shuffle(&mut rng);
        for (row, v) in out.x.iter_mut().zip(col) {
            row[j] = v;
        }
    }
    out
}

/// [`kfold_cv`] on column-permuted features with untouched targets.
pub fn permutation_baseline(data: &Dataset, spec: &ModelSpec, k: usize, seed: u64) -> Result<EvalResult, MlError> {
    let permuted = permute_columns(data, derive_seed(seed, "permute"));
    let mut res = kfold_cv(&permuted, spec, k, seed)?;
    res.permuted = true;
    Ok(res)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fold_sizes() {
        let folds = fold_assignment(10, 4, 3).unwrap();
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 2, 2]);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(fold_assignment(3, 4, 0).is_err());
    }

    #[test]
    fn permuting_keeps_column_multisets() {
        let data = Dataset::from_xy((0..8).map(|i| vec![i as f64, 5.0]).collect(), vec![0.0; 8]).unwrap();
        let p = permute_columns(&data, 1);
        let mut c0: Vec<f64> = p.x.iter().map(|r| r[0]).collect();
        c0.sort_by(f64::total_cmp);
        assert_eq!(c0, (0..8).map(|i| i as f64).collect::<Vec<_>>());
        assert!(p.x.iter().all(|r| r[1] == 5.0));
        assert_eq!(p.y, data.y);
    }
}
