//! Monte-Carlo permutation-sampling Shapley values.
//!
//! For each explained row and each sample, a random feature ordering and a
//! background row are drawn. Features are switched from the background value
//! to the explained value one at a time in that order, and each feature is
//! credited with the change in prediction it caused.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::TrainedModel;
use crate::MlError;

pub const MIN_SAMPLES: usize = 100;
pub const DEFAULT_SAMPLES: usize = 2000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    /// `phi[row][feature]`.
    pub phi: Vec<Vec<f64>>,
    /// Standard error of each entry of `phi`.
    pub phi_se: Vec<Vec<f64>>,
    /// Mean prediction over the whole background set.
    pub base: f64,
    pub predictions: Vec<f64>,
    /// Standard error of `Σ phi + base` as an estimate of the prediction.
    pub additivity_se: Vec<f64>,
}

impl Attribution {
    /// `prediction − base − Σ phi` per row.
    pub fn additivity_residuals(&self) -> Vec<f64> {
        self.phi
            .iter()
            .zip(&self.predictions)
            .map(|(row, p)| p - self.base - row.iter().sum::<f64>())
            .collect()
    }
}

struct RowEstimate {
    phi: Vec<f64>,
    phi_se: Vec<f64>,
    prediction: f64,
    background_sd: f64,
}

fn explain_row(model: &TrainedModel, background: &[Vec<f64>], x: &[f64], n_samples: usize, seed: u64, row: usize) -> RowEstimate {
    let p = x.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(row as u64);
    let mut bg_order: Vec<usize> = (0..background.len()).collect();
    bg_order.shuffle(&mut rng);
    let mut perm: Vec<usize> = (0..p).collect();
    let mut sum = vec![0.0; p];
    let mut sum_sq = vec![0.0; p];
    let (mut fz_sum, mut fz_sq) = (0.0, 0.0);
    let mut v = vec![0.0; p];
    for s in 0..n_samples {
        // Cycle through a shuffled background so every row is used evenly.
        if s > 0 && s % background.len() == 0 {
            bg_order.shuffle(&mut rng);
        }
        let z = &background[bg_order[s % background.len()]];
        perm.shuffle(&mut rng);
        v.copy_from_slice(z);
        let mut prev = model.predict(&v);
        fz_sum += prev;
        fz_sq += prev * prev;
        for &j in &perm {
            v[j] = x[j];
            let next = model.predict(&v);
            let d = next - prev;
            sum[j] += d;
            sum_sq[j] += d * d;
            prev = next;
        }
    }
    let n = n_samples as f64;
    let sd = |s: f64, q: f64| ((q - s * s / n) / (n - 1.0)).max(0.0).sqrt();
    RowEstimate {
        phi: sum.iter().map(|s| s / n).collect(),
        phi_se: sum.iter().zip(&sum_sq).map(|(&s, &q)| sd(s, q) / n.sqrt()).collect(),
        prediction: model.predict(x),
        background_sd: sd(fz_sum, fz_sq),
    }
}

/// Attributions for `rows` against the `background` set (normally the
/// model's training rows).
pub fn shapley_attribution(
    model: &TrainedModel,
    background: &[Vec<f64>],
    rows: &[Vec<f64>],
    n_samples: usize,
    seed: u64,
) -> Result<Attribution, MlError> {
    if n_samples < MIN_SAMPLES {
        return Err(MlError::TooFewSamples {
            min: MIN_SAMPLES,
            got: n_samples,
        });
    }
    if background.is_empty() {
        return Err(MlError::TooFewRows { needed: 1, got: 0 });
    }
    let p = background[0].len();
    for (row, r) in background.iter().chain(rows).enumerate() {
        if r.len() != p {
            return Err(MlError::Shape {
                row,
                got: r.len(),
                expected: p,
            });
        }
    }
    let base = background.iter().map(|z| model.predict(z)).sum::<f64>() / background.len() as f64;
    let est: Vec<RowEstimate> = rows
        .par_iter()
        .enumerate()
        .map(|(i, x)| explain_row(model, background, x, n_samples, seed, i))
        .collect();
    let sqrt_n = (n_samples as f64).sqrt();
    Ok(Attribution {
        base,
        predictions: est.iter().map(|e| e.prediction).collect(),
        additivity_se: est.iter().map(|e| e.background_sd / sqrt_n).collect(),
        phi_se: est.iter().map(|e| e.phi_se.clone()).collect(),
        phi: est.into_iter().map(|e| e.phi).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{fit, ModelKind, ModelSpec};

    #[test]
    fn rejects_too_few_samples() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let m = fit(&ModelSpec::default_for(ModelKind::Linear), &x, &y).unwrap();
        assert_eq!(
            shapley_attribution(&m, &x, &x[..1], 50, 0),
            Err(MlError::TooFewSamples { min: 100, got: 50 })
        );
    }

    #[test]
    fn single_feature_gets_everything() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64]).collect();
        let y: Vec<f64> = (0..10).map(|i| 3.0 * i as f64).collect();
        let m = fit(&ModelSpec::default_for(ModelKind::Linear), &x, &y).unwrap();
        let a = shapley_attribution(&m, &x, &[vec![9.0]], 1000, 0).unwrap();
        assert!((a.base - 13.5).abs() < 1e-9);
        assert!((a.phi[0][0] - 13.5).abs() < 1e-9);
    }
}
