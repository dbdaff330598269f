//! Retention-parameterised spreading activation.
//!
//! Every node keeps a fraction `r` of its activation and hands the rest out
//! in equal shares to its neighbours. Mass is conserved, and on a connected
//! component the walk converges to activation proportional to degree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::IndexedGraph;
use crate::netbuild::{BuilderTag, LexicalNetwork};
use crate::textpipe::PromptMatch;

#[derive(Debug, Error, PartialEq)]
pub enum ActivationError {
    #[error("retention must lie in (0,1), got {0}")]
    InvalidRetention(f64),
    #[error("seed `{0}` is not a node of the network")]
    MissingSeed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpreadingParams {
    pub retention: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SpreadingParams {
    fn default() -> Self {
        Self {
            retention: 0.5,
            tol: 1e-9,
            max_iter: 100_000,
        }
    }
}

impl SpreadingParams {
    pub fn with_retention(retention: f64) -> Self {
        Self {
            retention,
            ..Self::default()
        }
    }
}

/// Activation per node index of an [`IndexedGraph`].
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationState {
    pub values: Vec<f64>,
    pub step: usize,
}

impl ActivationState {
    pub fn total(&self) -> f64 {
        self.values.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActivationTrace {
    pub seed: String,
    pub retention: f64,
    /// Seed activation at step 0, 1, 2, ...
    pub seed_series: Vec<f64>,
    pub stationary_alpha: f64,
    pub converged: bool,
    pub steps_taken: usize,
}

fn check_retention(r: f64) -> Result<(), ActivationError> {
    if r > 0.0 && r < 1.0 {
        Ok(())
    } else {
        Err(ActivationError::InvalidRetention(r))
    }
}

/// All mass `N = |nodes|` on the seed.
pub fn init_activation(g: &IndexedGraph, seed: &str) -> Result<ActivationState, ActivationError> {
    let s = g.index_of(seed).ok_or_else(|| ActivationError::MissingSeed(seed.to_string()))?;
    let mut values = vec![0.0; g.len()];
    values[s] = g.len() as f64;
    Ok(ActivationState { values, step: 0 })
}

fn step_into(values: &[f64], g: &IndexedGraph, r: f64, out: &mut [f64]) {
    for (j, (o, v)) in out.iter_mut().zip(values).enumerate() {
        *o = if g.degree(j) == 0 { *v } else { r * v };
    }
    for (j, &a) in values.iter().enumerate() {
        let k = g.degree(j);
        if k > 0 && a != 0.0 {
            let share = (1.0 - r) * a / k as f64;
            for &i in g.neighbors(j) {
                out[i] += share;
            }
        }
    }
}

/// One synchronous update.
pub fn step(state: &ActivationState, g: &IndexedGraph, retention: f64) -> Result<ActivationState, ActivationError> {
    check_retention(retention)?;
    let mut values = vec![0.0; state.values.len()];
    step_into(&state.values, g, retention, &mut values);
    Ok(ActivationState {
        values,
        step: state.step + 1,
    })
}

/// Iterate until the largest per-node change is below `tol`.
pub fn run_to_stationarity(
    g: &IndexedGraph,
    seed: &str,
    params: SpreadingParams,
) -> Result<ActivationTrace, ActivationError> {
    check_retention(params.retention)?;
    let s = g.index_of(seed).ok_or_else(|| ActivationError::MissingSeed(seed.to_string()))?;
    let mut cur = init_activation(g, seed)?.values;
    let mut next = vec![0.0; cur.len()];
    let mut series = vec![cur[s]];
    let mut converged = false;
    let mut steps = 0;
    while steps < params.max_iter {
        step_into(&cur, g, params.retention, &mut next);
        steps += 1;
        let change = cur.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        std::mem::swap(&mut cur, &mut next);
        series.push(cur[s]);
        if change < params.tol {
            converged = true;
            break;
        }
    }
    Ok(ActivationTrace {
        seed: seed.to_string(),
        retention: params.retention,
        stationary_alpha: cur[s],
        seed_series: series,
        converged,
        steps_taken: steps,
    })
}

/// Closed-form limit: `N · deg(seed) / Σ_component deg`, or `N` for an
/// isolated seed.
pub fn stationary_oracle(g: &IndexedGraph, seed: &str) -> Result<f64, ActivationError> {
    let s = g.index_of(seed).ok_or_else(|| ActivationError::MissingSeed(seed.to_string()))?;
    let n = g.len() as f64;
    let k = g.degree(s);
    if k == 0 {
        return Ok(n);
    }
    let comp_degree: usize = g
        .bfs_distances(s)
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_some())
        .map(|(v, _)| g.degree(v))
        .sum();
    Ok(n * k as f64 / comp_degree as f64)
}

/// Stationary seed activation, with `N` for seeds absent from the network.
pub fn seed_alpha(g: &IndexedGraph, seed: &str, params: SpreadingParams) -> Result<ActivationTrace, ActivationError> {
    if g.index_of(seed).is_none() {
        check_retention(params.retention)?;
        let n = g.len() as f64;
        return Ok(ActivationTrace {
            seed: seed.to_string(),
            retention: params.retention,
            seed_series: vec![n],
            stationary_alpha: n,
            converged: true,
            steps_taken: 0,
        });
    }
    run_to_stationarity(g, seed, params)
}

/// Stationary α for the three prompt seeds of one story on each network.
pub fn prompt_alphas(
    prompts: &[PromptMatch; 3],
    nets: &[LexicalNetwork],
    params: SpreadingParams,
) -> Result<Vec<(BuilderTag, [ActivationTrace; 3])>, ActivationError> {
    nets.iter()
        .map(|net| {
            let g = net.to_indexed();
            let [a, b, c] = prompts;
            Ok((
                net.tag(),
                [
                    seed_alpha(&g, a.seed(), params)?,
                    seed_alpha(&g, b.seed(), params)?,
                    seed_alpha(&g, c.seed(), params)?,
                ],
            ))
        })
        .collect()
}
