//! Nonparametric tests, rank correlations and error measures.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} observations, got {got}")]
    TooFew { needed: usize, got: usize },
    #[error("p-value {0} outside [0,1]")]
    PValueOutOfRange(f64),
    #[error("non-finite input")]
    NonFinite,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    #[default]
    TwoSided,
    Less,
    Greater,
}

impl fmt::Display for Alternative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Alternative::TwoSided => "two-sided",
            Alternative::Less => "less",
            Alternative::Greater => "greater",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: usize,
    pub method: String,
    pub alternative: Alternative,
}

fn check_pairs(x: &[f64], y: &[f64], needed: usize) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < needed {
        return Err(StatsError::TooFew { needed, got: x.len() });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    Ok(())
}

/// Paired permutation test on `mean(x − y)` by random sign flips, with the
/// add-one p-value `(1 + #extreme) / (1 + n_perm)`.
pub fn paired_signflip_test(
    x: &[f64],
    y: &[f64],
    n_perm: usize,
    seed: u64,
    alternative: Alternative,
) -> Result<TestResult, StatsError> {
    check_pairs(x, y, 2)?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let n = d.len() as f64;
    let obs = d.iter().sum::<f64>() / n;
    let eps = 1e-12 * (1.0 + d.iter().map(|v| v.abs()).fold(0.0, f64::max));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut extreme = 0usize;
    for _ in 0..n_perm {
        let mut s = 0.0;
        for v in &d {
            s += if rng.random::<bool>() { *v } else { -v };
        }
        let null = s / n;
        let hit = match alternative {
            Alternative::TwoSided => null.abs() >= obs.abs() - eps,
            Alternative::Less => null <= obs + eps,
            Alternative::Greater => null >= obs - eps,
        };
        extreme += usize::from(hit);
    }
    Ok(TestResult {
        statistic: obs,
        p_value: (1 + extreme) as f64 / (1 + n_perm) as f64,
        n: d.len(),
        method: "paired sign-flip permutation".into(),
        alternative,
    })
}

/// Benjamini–Hochberg step-up adjustment, input order preserved.
pub fn bh_fdr(p: &[f64]) -> Result<Vec<f64>, StatsError> {
    if let Some(&bad) = p.iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(StatsError::PValueOutOfRange(bad));
    }
    let m = p.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p[b].total_cmp(&p[a]));
    let mut out = vec![0.0; m];
    let mut running = 1.0f64;
    for (pos, &i) in order.iter().enumerate() {
        let rank = m - pos;
        running = running.min(p[i] * m as f64 / rank as f64);
        out[i] = running.max(p[i]).min(1.0);
    }
    Ok(out)
}

/// Average (mid) ranks starting at 1.
pub fn rank(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Largest sample size for which the Wilcoxon null is enumerated exactly.
pub const WILCOXON_EXACT_MAX: usize = 25;

/// Wilcoxon signed-rank test on `x − y`. Zero differences are dropped.
///
/// The statistic is `min(W+, W−)` for two-sided tests and `W+` otherwise.
/// For `n ≤ 25` the null is the exact distribution of `W+` under the
/// observed (possibly tied) ranks; above that a tie-corrected normal
/// approximation with continuity correction is used.
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], alternative: Alternative) -> Result<TestResult, StatsError> {
    check_pairs(x, y, 1)?;
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            method: "wilcoxon signed-rank (all differences zero)".into(),
            alternative,
        });
    }
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks = rank(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum::<f64>() + 0.0;
    let total = (n * (n + 1)) as f64 / 2.0;
    let w_minus = total - w_plus;

    let (p_le, p_ge, method) = if n <= WILCOXON_EXACT_MAX {
        let (le, ge) = exact_tails(&ranks, w_plus);
        (le, ge, "wilcoxon signed-rank (exact)")
    } else {
        let mean = total / 2.0;
        let tie_term: f64 = tie_sizes(&abs).iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let var = (n * (n + 1) * (2 * n + 1)) as f64 / 24.0 - tie_term;
        let sd = var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        let le = normal.cdf((w_plus - mean + 0.5) / sd);
        let ge = 1.0 - normal.cdf((w_plus - mean - 0.5) / sd);
        (le, ge, "wilcoxon signed-rank (normal approximation)")
    };
    let (statistic, p) = match alternative {
        Alternative::TwoSided => (w_plus.min(w_minus), (2.0 * p_le.min(p_ge)).min(1.0)),
        Alternative::Less => (w_plus, p_le),
        Alternative::Greater => (w_plus, p_ge),
    };
    Ok(TestResult {
        statistic,
        p_value: p.clamp(0.0, 1.0),
        n,
        method: method.into(),
        alternative,
    })
}

fn tie_sizes(values: &[f64]) -> Vec<usize> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        out.push(j - i + 1);
        i = j + 1;
    }
    out
}

/// `P(W+ ≤ w)` and `P(W+ ≥ w)` under independent fair signs on `ranks`.
/// Mid-ranks are multiples of 1/2, so the DP runs over doubled ranks.
fn exact_tails(ranks: &[f64], w: f64) -> (f64, f64) {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut dist = vec![0.0f64; max + 1];
    dist[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            let v = dist[s] * 0.5;
            dist[s] = v;
            dist[s + r] += v;
        }
        reach += r;
    }
    let target = (w * 2.0).round() as usize;
    let le = dist[..=target.min(max)].iter().sum::<f64>();
    let ge = if target > max { 0.0 } else { dist[target..].iter().sum::<f64>() };
    (le.min(1.0), ge.min(1.0))
}

/// A correlation coefficient; `defined` is false when either input has
/// zero variance, in which case `value` is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Correlation {
    pub value: f64,
    pub defined: bool,
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    check_pairs(x, y, 2)?;
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(Correlation {
            value: 0.0,
            defined: false,
        });
    }
    Ok(Correlation {
        value: (sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0),
        defined: true,
    })
}

pub fn spearman(x: &[f64], y: &[f64]) -> Result<Correlation, StatsError> {
    check_pairs(x, y, 2)?;
    pearson(&rank(x), &rank(y))
}

pub fn mae(pred: &[f64], truth: &[f64]) -> Result<f64, StatsError> {
    check_pairs(pred, truth, 1)?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).sum::<f64>() / pred.len() as f64)
}

/// One paired comparison between two labelled samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairComparison {
    pub left: String,
    pub right: String,
    pub mean_difference: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
}

/// Sign-flip tests for every unordered pair of samples, BH-adjusted
/// together. Each pair gets its own seed derived from `seed` and its
/// position so results do not depend on evaluation order.
pub fn pairwise_signflip(
    samples: &[(String, Vec<f64>)],
    n_perm: usize,
    seed: u64,
) -> Result<Vec<PairComparison>, StatsError> {
    let mut out = Vec::new();
    let mut k = 0u64;
    for i in 0..samples.len() {
        for j in i + 1..samples.len() {
            let res = paired_signflip_test(
                &samples[i].1,
                &samples[j].1,
                n_perm,
                seed.wrapping_add(k.wrapping_mul(0x9E37_79B9_7F4A_7C15)),
                Alternative::TwoSided,
            )?;
            k += 1;
            out.push(PairComparison {
                left: samples[i].0.clone(),
                right: samples[j].0.clone(),
                mean_difference: res.statistic,
                p_raw: res.p_value,
                p_adjusted: 0.0,
            });
        }
    }
    let raw: Vec<f64> = out.iter().map(|c| c.p_raw).collect();
    for (c, p) in out.iter_mut().zip(bh_fdr(&raw)?) {
        c.p_adjusted = p;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bh_example() {
        assert_eq!(bh_fdr(&[0.01, 0.02, 0.03, 0.04]).unwrap(), vec![0.04; 4]);
        assert_eq!(bh_fdr(&[0.3]).unwrap(), vec![0.3]);
        assert_eq!(bh_fdr(&[1.0, 1.0]).unwrap(), vec![1.0, 1.0]);
        assert!(bh_fdr(&[1.2]).is_err());
        let adj = bh_fdr(&[0.04, 0.001, 0.5]).unwrap();
        assert!((adj[0] - 0.06).abs() < 1e-15 && (adj[1] - 0.003).abs() < 1e-15 && adj[2] == 0.5);
    }

    #[test]
    fn signflip_edge_cases() {
        let x = [1.0, 2.0, 3.0];
        let r = paired_signflip_test(&x, &x, 500, 1, Alternative::TwoSided).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        let x: Vec<f64> = (0..20).map(|i| i as f64 + 1.0).collect();
        let y: Vec<f64> = x.iter().map(|v| v - 1.0).collect();
        let r = paired_signflip_test(&x, &y, 10_000, 7, Alternative::TwoSided).unwrap();
        assert!(r.p_value < 0.001);
        assert_eq!(r.p_value, 1.0 / 10_001.0);
        assert!(paired_signflip_test(&[1.0], &[1.0], 10, 0, Alternative::TwoSided).is_err());
        assert!(paired_signflip_test(&[1.0, 2.0], &[1.0], 10, 0, Alternative::TwoSided).is_err());
    }

    #[test]
    fn wilcoxon_small_cases() {
        let r = wilcoxon_signed_rank(&[1.0, -1.0], &[0.0, 0.0], Alternative::TwoSided).unwrap();
        assert_eq!(r.p_value, 1.0);
        let x: Vec<f64> = (1..=7).map(f64::from).collect();
        let y = vec![0.0; 7];
        let r = wilcoxon_signed_rank(&x, &y, Alternative::TwoSided).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 1.0 / 64.0).abs() < 1e-15);
        let r = wilcoxon_signed_rank(&[2.0, 2.0], &[2.0, 2.0], Alternative::Less).unwrap();
        assert_eq!((r.n, r.p_value), (0, 1.0));
    }

    #[test]
    fn ranks_and_correlations() {
        assert_eq!(rank(&[10.0, 20.0, 20.0, 5.0]), vec![2.0, 3.5, 3.5, 1.0]);
        let x = [1.0, 2.0, 3.0, 4.0];
        assert!((spearman(&x, &[10.0, 20.0, 30.0, 40.0]).unwrap().value - 1.0).abs() < 1e-15);
        assert!((spearman(&x, &[4.0, 3.0, 2.0, 1.0]).unwrap().value + 1.0).abs() < 1e-15);
        let shifted: Vec<f64> = x.iter().map(|v| v + 0.5).collect();
        assert!((pearson(&shifted, &x).unwrap().value - 1.0).abs() < 1e-15);
        assert_eq!(mae(&shifted, &x).unwrap(), 0.5);
        let flat = pearson(&x, &[1.0; 4]).unwrap();
        assert!(!flat.defined && flat.value == 0.0);
    }
}
