//! Planted linear signal for checking the harness end to end.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::dataset::Dataset;

/// Non-zero weights of the first five features; the rest are pure noise.
pub const PLANTED_WEIGHTS: [f64; 5] = [1.0, -0.8, 0.6, 0.5, -0.4];

pub fn planted_weights(p: usize) -> Vec<f64> {
    (0..p).map(|j| PLANTED_WEIGHTS.get(j).copied().unwrap_or(0.0)).collect()
}

/// `x ~ N(0, I_p)`, `y = w·x + N(0, sigma²)`.
pub fn planted_linear(n: usize, p: usize, sigma: f64, seed: u64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(0.0)).expect("finite sigma");
    let w = planted_weights(p);
    let mut x = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    for _ in 0..n {
        let row: Vec<f64> = (0..p).map(|_| StandardNormal.sample(&mut rng)).collect();
        let signal: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
        y.push(signal + noise.sample(&mut rng));
        x.push(row);
    }
    Dataset::from_xy(x, y).expect("generated rows are finite and rectangular")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_determinism() {
        let a = planted_linear(50, 18, 0.1, 7);
        assert_eq!((a.len(), a.n_features()), (50, 18));
        assert_eq!(a, planted_linear(50, 18, 0.1, 7));
        assert_ne!(a.y, planted_linear(50, 18, 0.1, 8).y);
    }
}
