//! CART regression trees and the two ensembles built from them.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Fraction of features considered at each split; `None` uses all.
    pub max_features: Option<f64>,
    /// Minimum weighted impurity decrease, normalised by the sample count.
    pub min_impurity_decrease: f64,
}

impl Default for TreeParams {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            max_features: None,
            min_impurity_decrease: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionTree {
    nodes: Vec<Node>,
}

struct Builder<'a, R: Rng> {
    x: &'a [Vec<f64>],
    y: Vec<f64>,
    rows: Vec<usize>,
    orders: Vec<Vec<usize>>,
    params: TreeParams,
    total: f64,
    rng: &'a mut R,
    nodes: Vec<Node>,
    is_left: Vec<bool>,
    scratch: Vec<usize>,
}

impl<R: Rng> Builder<'_, R> {
    fn value(&self, pos: usize, f: usize) -> f64 {
        self.x[self.rows[pos]][f]
    }

    fn build(&mut self, lo: usize, hi: usize, depth: usize) -> usize {
        let id = self.nodes.len();
        let n = (hi - lo) as f64;
        let (sum, sum_sq) = self.orders[0][lo..hi]
            .iter()
            .fold((0.0, 0.0), |(s, q), &pos| (s + self.y[pos], q + self.y[pos] * self.y[pos]));
        self.nodes.push(Node::Leaf(sum / n));

        let min_leaf = self.params.min_samples_leaf.max(1);
        if self.params.max_depth.is_some_and(|d| depth >= d) || hi - lo < 2 * min_leaf {
            return id;
        }
        let p = self.orders.len();
        let features: Vec<usize> = match self.params.max_features {
            Some(frac) if frac < 1.0 => {
                let k = ((frac * p as f64).floor() as usize).clamp(1, p);
                sample(self.rng, p, k).into_vec()
            }
            _ => (0..p).collect(),
        };
        let min_gain = (self.params.min_impurity_decrease * self.total).max(1e-12 * sum_sq.max(f64::MIN_POSITIVE));
        let parent = sum * sum / n;
        let mut best: Option<(f64, usize, usize, f64)> = None;
        for &f in &features {
            let order = &self.orders[f];
            let mut ls = 0.0;
            for i in lo..hi - 1 {
                ls += self.y[order[i]];
                let ln = i + 1 - lo;
                let rn = hi - lo - ln;
                if ln < min_leaf {
                    continue;
                }
                if rn < min_leaf {
                    break;
                }
                let (a, b) = (self.value(order[i], f), self.value(order[i + 1], f));
                if a >= b {
                    continue;
                }
                let rs = sum - ls;
                let gain = ls * ls / ln as f64 + rs * rs / rn as f64 - parent;
                if gain > min_gain && best.is_none_or(|(g, ..)| gain > g) {
                    let mid = 0.5 * (a + b);
                    let threshold = if mid < b { mid } else { a };
                    best = Some((gain, f, i + 1, threshold));
                }
            }
        }
        let Some((_, feature, split, threshold)) = best else {
            return id;
        };

        for &pos in &self.orders[feature][lo..split] {
            self.is_left[pos] = true;
        }
        for f in 0..p {
            self.scratch.clear();
            let order = &mut self.orders[f];
            let mut w = lo;
            for i in lo..hi {
                let pos = order[i];
                if self.is_left[pos] {
                    order[w] = pos;
                    w += 1;
                } else {
                    self.scratch.push(pos);
                }
            }
            order[w..hi].copy_from_slice(&self.scratch);
        }
        for &pos in &self.orders[0][lo..split] {
            self.is_left[pos] = false;
        }

        let left = self.build(lo, split, depth + 1);
        let right = self.build(split, hi, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

impl RegressionTree {
    /// Fit on `samples` (row indices into `x`, repeats allowed).
    pub fn fit<R: Rng>(x: &[Vec<f64>], y: &[f64], samples: &[usize], params: TreeParams, rng: &mut R) -> Self {
        if samples.is_empty() {
            return Self {
                nodes: vec![Node::Leaf(0.0)],
            };
        }
        let p = x[samples[0]].len();
        let m = samples.len();
        let orders: Vec<Vec<usize>> = (0..p.max(1))
            .map(|f| {
                let mut o: Vec<usize> = (0..m).collect();
                if p > 0 {
                    o.sort_by(|&a, &b| x[samples[a]][f].total_cmp(&x[samples[b]][f]).then(a.cmp(&b)));
                }
                o
            })
            .collect();
        let mut b = Builder {
            x,
            y: samples.iter().map(|&i| y[i]).collect(),
            rows: samples.to_vec(),
            orders,
            params,
            total: m as f64,
            rng,
            nodes: Vec::new(),
            is_left: vec![false; m],
            scratch: Vec::with_capacity(m),
        };
        if p == 0 {
            b.orders.clear();
            let mean = b.y.iter().sum::<f64>() / m as f64;
            return Self {
                nodes: vec![Node::Leaf(mean)],
            };
        }
        b.build(0, m, 0);
        Self { nodes: b.nodes }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }

    /// Features used by at least one split.
    pub fn split_features(&self) -> Vec<usize> {
        let mut f: Vec<usize> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Split { feature, .. } => Some(*feature),
                Node::Leaf(_) => None,
            })
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }
}

fn tree_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    trees: Vec<RegressionTree>,
}

impl RandomForest {
    /// Each tree draws its bootstrap sample and split features from its own
    /// stream of `seed`, so the fit is identical however rayon schedules it.
    pub fn fit(x: &[Vec<f64>], y: &[f64], n_trees: usize, params: TreeParams, bootstrap: bool, seed: u64) -> Self {
        let n = y.len();
        let trees = (0..n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = tree_rng(seed, t as u64);
                let samples: Vec<usize> = if bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                RegressionTree::fit(x, y, &samples, params, &mut rng)
            })
            .collect();
        Self { trees }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len().max(1) as f64
    }

    pub fn trees(&self) -> &[RegressionTree] {
        &self.trees
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostingParams {
    pub n_rounds: usize,
    pub learning_rate: f64,
    pub subsample: f64,
    pub tree: TreeParams,
}

/// Least-squares gradient boosting with stochastic row subsampling.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoosting {
    init: f64,
    learning_rate: f64,
    trees: Vec<RegressionTree>,
}

impl GradientBoosting {
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: BoostingParams, seed: u64) -> Self {
        let n = y.len();
        let init = y.iter().sum::<f64>() / n.max(1) as f64;
        let mut fitted = vec![init; n];
        let mut rng = tree_rng(seed, 0);
        let k = ((params.subsample * n as f64).floor() as usize).clamp(1.min(n), n);
        let mut trees = Vec::with_capacity(params.n_rounds);
        let mut residual = vec![0.0; n];
        for _ in 0..params.n_rounds {
            for i in 0..n {
                residual[i] = y[i] - fitted[i];
            }
            let mut rows: Vec<usize> = if k < n { sample(&mut rng, n, k).into_vec() } else { (0..n).collect() };
            rows.sort_unstable();
            let tree = RegressionTree::fit(x, &residual, &rows, params.tree, &mut rng);
            for (f, row) in fitted.iter_mut().zip(x) {
                *f += params.learning_rate * tree.predict(row);
            }
            trees.push(tree);
        }
        Self {
            init,
            learning_rate: params.learning_rate,
            trees,
        }
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.init + self.learning_rate * self.trees.iter().map(|t| t.predict(row)).sum::<f64>()
    }
}
