//! Index-based adjacency view of a [`LexicalNetwork`](crate::LexicalNetwork).

use std::collections::{HashMap, VecDeque};

/// Simple undirected graph with nodes `0..n` and sorted neighbour lists.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IndexedGraph {
    labels: Vec<String>,
    neighbors: Vec<Vec<usize>>,
    index: HashMap<String, usize>,
}

impl IndexedGraph {
    /// Build from labels and undirected edges given as index pairs.
    /// Self-loops and duplicate edges are dropped.
    pub fn from_edges(labels: Vec<String>, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let n = labels.len();
        let mut neighbors = vec![Vec::new(); n];
        for (a, b) in edges {
            assert!(a < n && b < n, "edge ({a}, {b}) out of range for {n} nodes");
            if a != b {
                neighbors[a].push(b);
                neighbors[b].push(a);
            }
        }
        for list in &mut neighbors {
            list.sort_unstable();
            list.dedup();
        }
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Self {
            labels,
            neighbors,
            index,
        }
    }

    /// Unlabelled graph on `n` nodes, labels `"0".."n-1"`.
    pub fn with_nodes(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Self::from_edges((0..n).map(|i| i.to_string()).collect(), edges)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn edge_count(&self) -> usize {
        self.neighbors.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, node: usize) -> &str {
        &self.labels[node]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn neighbors(&self, node: usize) -> &[usize] {
        &self.neighbors[node]
    }

    pub fn degree(&self, node: usize) -> usize {
        self.neighbors[node].len()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.neighbors[a].binary_search(&b).is_ok()
    }

    /// BFS hop distances from `source`; `None` for unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        let mut queue = VecDeque::new();
        dist[source] = Some(0);
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap_or(0);
            for &v in &self.neighbors[u] {
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Connected components as sorted index lists, largest first; ties go to
    /// the component holding the lexicographically smallest label.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.len()];
        let mut comps = Vec::new();
        for start in 0..self.len() {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &v in &self.neighbors[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            comps.push(comp);
        }
        let min_label = |c: &Vec<usize>| c.iter().map(|&i| self.labels[i].as_str()).min().unwrap_or("");
        comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| min_label(a).cmp(min_label(b))));
        comps
    }

    /// Induced subgraph on `nodes` (indices into `self`), preserving order.
    pub fn subgraph(&self, nodes: &[usize]) -> IndexedGraph {
        let mut remap = vec![usize::MAX; self.len()];
        for (new, &old) in nodes.iter().enumerate() {
            remap[old] = new;
        }
        let labels = nodes.iter().map(|&i| self.labels[i].clone()).collect();
        let edges = nodes.iter().flat_map(|&u| {
            let remap = &remap;
            self.neighbors[u]
                .iter()
                .filter(move |&&v| remap[v] != usize::MAX && u < v)
                .map(move |&v| (remap[u], remap[v]))
        });
        IndexedGraph::from_edges(labels, edges.collect::<Vec<_>>())
    }

    /// Subgraph induced by the largest connected component.
    pub fn largest_component(&self) -> IndexedGraph {
        match self.components().first() {
            Some(lcc) => self.subgraph(lcc),
            None => IndexedGraph::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_ordering() {
        let g = IndexedGraph::from_edges(
            vec!["d".into(), "c".into(), "b".into(), "a".into(), "e".into()],
            [(0, 1), (2, 3)],
        );
        let comps = g.components();
        assert_eq!(comps, vec![vec![2, 3], vec![0, 1], vec![4]]);
        assert_eq!(g.largest_component().labels(), ["b", "a"]);
    }

    #[test]
    fn duplicate_and_self_edges_dropped() {
        let g = IndexedGraph::with_nodes(3, [(0, 1), (1, 0), (2, 2)]);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(2), 0);
    }
}
