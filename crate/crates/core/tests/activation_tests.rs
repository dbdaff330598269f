mod common;

use common::{graph_strategy, indexed};
use proptest::prelude::*;
use storynet_core::activation::{
    init_activation, prompt_alphas, run_to_stationarity, seed_alpha, stationary_oracle, step, SpreadingParams,
};
use storynet_core::textpipe::PromptMatch;
use storynet_core::{BuilderTag, IndexedGraph, LexicalNetwork};

const RETENTIONS: [f64; 5] = [0.2, 0.4, 0.5, 0.6, 0.8];

/// Independent stationary value: BFS over the seed's component and the
/// degree-share formula written out from an adjacency matrix.
fn degree_share(n: usize, edges: &[(usize, usize)], seed: usize) -> f64 {
    let mut adj = vec![vec![]; n];
    for &(a, b) in edges {
        adj[a].push(b);
        adj[b].push(a);
    }
    if adj[seed].is_empty() {
        return n as f64;
    }
    let mut seen = vec![false; n];
    let mut stack = vec![seed];
    seen[seed] = true;
    let mut total = 0usize;
    while let Some(u) = stack.pop() {
        total += adj[u].len();
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    n as f64 * adj[seed].len() as f64 / total as f64
}

#[test]
fn path_and_complete_graph_limits() {
    let g = IndexedGraph::from_edges(vec!["a".into(), "b".into(), "c".into()], [(0, 1), (1, 2)]);
    assert!((run_to_stationarity(&g, "a", SpreadingParams::default()).unwrap().stationary_alpha - 0.75).abs() < 1e-6);
    let k5 = indexed(5, &(0..5).flat_map(|i| (i + 1..5).map(move |j| (i, j))).collect::<Vec<_>>());
    assert!((stationary_oracle(&k5, "2").unwrap() - 1.0).abs() < 1e-15);
}

#[test]
fn isolated_and_absent_seeds_get_total_mass() {
    let g = indexed(6, &[(0, 1), (1, 2), (3, 4)]);
    let tr = run_to_stationarity(&g, "5", SpreadingParams::default()).unwrap();
    assert_eq!(tr.stationary_alpha, 6.0);
    assert!(tr.converged);
    assert_eq!(seed_alpha(&g, "nowhere", SpreadingParams::default()).unwrap().stationary_alpha, 6.0);
    assert!(init_activation(&g, "nowhere").is_err());
}

#[test]
fn prompt_alphas_use_matched_nodes() {
    let net = LexicalNetwork::from_edges(BuilderTag::Tfmn, ["gloom", "heavy", "payment", "late"], [("gloom", "heavy"), ("payment", "late"), ("gloom", "late")]);
    let m = |p: &str, node: Option<&str>| PromptMatch {
        prompt_lemma: p.into(),
        matched: node.is_some(),
        matched_node: node.map(str::to_string),
    };
    let prompts = [m("gloom", Some("gloom")), m("payments", Some("payment")), m("exist", None)];
    let out = prompt_alphas(&prompts, &[net.clone()], SpreadingParams::default()).unwrap();
    let [a, b, c] = &out[0].1;
    let g = net.to_indexed();
    assert!((a.stationary_alpha - stationary_oracle(&g, "gloom").unwrap()).abs() < 1e-6);
    assert!((b.stationary_alpha - stationary_oracle(&g, "payment").unwrap()).abs() < 1e-6);
    assert_eq!(c.stationary_alpha, 4.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn mass_is_conserved_and_non_negative((n, edges) in graph_strategy(50), seed in any::<prop::sample::Index>(), r in 0.01f64..0.99) {
        let g = indexed(n, &edges);
        let s = seed.index(n).to_string();
        let mut st = init_activation(&g, &s).unwrap();
        for _ in 0..200 {
            st = step(&st, &g, r).unwrap();
            prop_assert!((st.total() - n as f64).abs() <= 1e-9);
            prop_assert!(st.values.iter().all(|&v| v >= 0.0));
        }
    }

    #[test]
    fn stationary_alpha_matches_degree_share((n, edges) in graph_strategy(50), seed in any::<prop::sample::Index>()) {
        let g = indexed(n, &edges);
        let s = seed.index(n);
        let expected = degree_share(n, &edges, s);
        prop_assert!((stationary_oracle(&g, &s.to_string()).unwrap() - expected).abs() < 1e-12);
        for r in RETENTIONS {
            let tr = run_to_stationarity(&g, &s.to_string(), SpreadingParams::with_retention(r)).unwrap();
            prop_assert!(tr.converged);
            prop_assert_eq!(tr.seed_series[0], n as f64);
            prop_assert!((tr.stationary_alpha - expected).abs() < 1e-6, "r={} alpha={} oracle={}", r, tr.stationary_alpha, expected);
        }
    }
}
