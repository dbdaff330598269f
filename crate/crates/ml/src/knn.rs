//! Distance-weighted k-nearest-neighbour regression.

use serde::{Deserialize, Serialize};

use crate::scale::Standardiser;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub scaler: Standardiser,
    pub k: usize,
    /// Minkowski exponent; 1 is Manhattan.
    pub p: f64,
    train: Vec<Vec<f64>>,
    targets: Vec<f64>,
}

impl KnnModel {
    pub fn fit(x: &[Vec<f64>], y: &[f64], k: usize, p: f64) -> Self {
        let scaler = Standardiser::fit(x);
        Self {
            train: scaler.transform(x),
            scaler,
            k,
            p,
            targets: y.to_vec(),
        }
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        if self.p == 1.0 {
            a.iter().zip(b).map(|(u, v)| (u - v).abs()).sum()
        } else {
            a.iter().zip(b).map(|(u, v)| (u - v).abs().powf(self.p)).sum::<f64>().powf(1.0 / self.p)
        }
    }

    /// Inverse-distance weighted mean of the `k` nearest targets; exact
    /// matches, if any, are averaged on their own.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let z = self.scaler.transform_row(row);
        let mut d: Vec<(f64, usize)> = self.train.iter().enumerate().map(|(i, t)| (self.distance(&z, t), i)).collect();
        let k = self.k.min(d.len());
        d.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let nearest = &d[..k];
        let exact: Vec<f64> = nearest.iter().filter(|(dist, _)| *dist == 0.0).map(|&(_, i)| self.targets[i]).collect();
        if !exact.is_empty() {
            return exact.iter().sum::<f64>() / exact.len() as f64;
        }
        let (num, den) = nearest.iter().fold((0.0, 0.0), |(num, den), &(dist, i)| {
            (num + self.targets[i] / dist, den + 1.0 / dist)
        });
        num / den
    }
}
