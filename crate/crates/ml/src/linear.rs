//! Ordinary least squares on standardised features.

use log::warn;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::scale::Standardiser;

/// Ridge strength used when the design matrix is rank deficient.
pub const FALLBACK_RIDGE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub scaler: Standardiser,
    /// Intercept followed by one weight per standardised feature.
    pub beta: Vec<f64>,
    pub ridge_used: f64,
}

impl LinearModel {
    /// Least squares with an unpenalised intercept. `ridge > 0` adds an L2
    /// penalty; an exact fit that turns out singular falls back to
    /// [`FALLBACK_RIDGE`] with a warning.
    pub fn fit(x: &[Vec<f64>], y: &[f64], ridge: f64) -> Self {
        let scaler = Standardiser::fit(x);
        let z = scaler.transform(x);
        let n = z.len();
        let p = scaler.mean.len();
        let design = DMatrix::from_fn(n, p + 1, |i, j| if j == 0 { 1.0 } else { z[i][j - 1] });
        let target = DVector::from_column_slice(y);

        if ridge == 0.0 {
            let svd = design.clone().svd(true, true);
            let smax = svd.singular_values.max();
            let tol = smax * (n.max(p + 1) as f64) * f64::EPSILON;
            let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
            if rank == p + 1 {
                if let Ok(beta) = svd.solve(&target, tol) {
                    return Self {
                        scaler,
                        beta: beta.iter().copied().collect(),
                        ridge_used: 0.0,
                    };
                }
            }
            warn!("design matrix is rank deficient (rank {rank} of {}); using ridge {FALLBACK_RIDGE}", p + 1);
            return Self::solve_ridge(scaler, &design, &target, FALLBACK_RIDGE);
        }
        Self::solve_ridge(scaler, &design, &target, ridge)
    }

    fn solve_ridge(scaler: Standardiser, design: &DMatrix<f64>, target: &DVector<f64>, ridge: f64) -> Self {
        let p1 = design.ncols();
        let mut gram = design.transpose() * design;
        for j in 1..p1 {
            gram[(j, j)] += ridge;
        }
        let rhs = design.transpose() * target;
        let beta = gram
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .or_else(|| gram.lu().solve(&rhs))
            .unwrap_or_else(|| DVector::zeros(p1));
        Self {
            scaler,
            beta: beta.iter().copied().collect(),
            ridge_used: ridge,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let z = self.scaler.transform_row(row);
        self.beta[0] + z.iter().zip(&self.beta[1..]).map(|(a, b)| a * b).sum::<f64>()
    }

    /// Slopes and intercept on the original feature scale.
    pub fn raw_coefficients(&self) -> (Vec<f64>, f64) {
        let slopes: Vec<f64> = self.beta[1..].iter().zip(&self.scaler.scale).map(|(b, s)| b / s).collect();
        let intercept = self.beta[0] - slopes.iter().zip(&self.scaler.mean).map(|(w, m)| w * m).sum::<f64>();
        (slopes, intercept)
    }
}
