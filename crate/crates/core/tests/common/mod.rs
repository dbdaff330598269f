#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::PathBuf;

use proptest::prelude::*;
use storynet_core::textpipe::{read_conllu, Preprocessor, Story, DEFAULT_PRONOUNS};
use storynet_core::IndexedGraph;

pub fn fixture(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

pub fn preprocessor() -> Preprocessor {
    Preprocessor::from_resources(&fixture("lemmas_en.tsv"), &fixture("stopwords_en.txt"), DEFAULT_PRONOUNS).unwrap()
}

pub fn strings(items: &[&str]) -> Vec<String> {
    items.iter().map(|s| s.to_string()).collect()
}

pub fn figure2_story(parsed: bool) -> Story {
    let pre = preprocessor();
    let parse = parsed.then(|| read_conllu(fixture("figure2.conllu").as_bytes()).unwrap().remove("gloom-story").unwrap());
    Story::new(
        "gloom-story",
        &strings(&["gloom", "payment", "exist"]),
        fixture("figure2.txt").trim(),
        BTreeMap::new(),
        &pre,
        parse,
    )
    .unwrap()
}

/// Random simple graph on `n` nodes as an edge list.
pub fn graph_strategy(max_n: usize) -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (1..=max_n, prop::sample::select(vec![0.1, 0.3, 0.6]), any::<u64>()).prop_map(|(n, p, seed)| {
        (n, random_edges(n, p, seed))
    })
}

/// Erdős–Rényi edges from a tiny deterministic LCG, independent of the crate's RNG use.
pub fn random_edges(n: usize, p: f64, seed: u64) -> Vec<(usize, usize)> {
    let mut state = seed ^ 0x2545_F491_4F6C_DD1D;
    let mut next = move || {
        state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (state >> 11) as f64 / (1u64 << 53) as f64
    };
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if next() < p {
                edges.push((i, j));
            }
        }
    }
    edges
}

pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut adj = vec![vec![false; n]; n];
    for &(a, b) in edges {
        adj[a][b] = true;
        adj[b][a] = true;
    }
    adj
}

/// All-pairs hop distances by Floyd–Warshall; `usize::MAX` when unreachable.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    const INF: usize = usize::MAX / 4;
    let mut d = vec![vec![INF; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for &(a, b) in edges {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    for row in &mut d {
        for v in row.iter_mut() {
            if *v >= INF {
                *v = usize::MAX;
            }
        }
    }
    d
}

/// Largest component from the distance matrix: the biggest reachability
/// class, ties broken by smallest label ("0".."n-1" as strings).
pub fn lcc_nodes(n: usize, dist: &[Vec<usize>]) -> Vec<usize> {
    let mut best: Vec<usize> = Vec::new();
    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| dist[i][j] != usize::MAX).collect();
        comp.iter().for_each(|&j| seen[j] = true);
        let key = |c: &Vec<usize>| c.iter().map(|v| v.to_string()).min().unwrap();
        if comp.len() > best.len() || (comp.len() == best.len() && key(&comp) < key(&best)) {
            best = comp;
        }
    }
    best
}

pub fn indexed(n: usize, edges: &[(usize, usize)]) -> IndexedGraph {
    IndexedGraph::with_nodes(n, edges.iter().copied())
}
