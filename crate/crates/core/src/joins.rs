//! Subject-attribute join graph and join-path enumeration.
//!
//! Two datasets are joinable when some pair of their attributes has
//! overlapping value tokens (a value-forest hit) and at least one attribute
//! of the pair is its dataset's subject attribute. Paths start at a top-k
//! dataset and extend through datasets outside the top-k that also carry
//! evidence of relatedness to the target.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use crate::index::{AttrId, Catalog, DatasetIdx, Evidence};
use crate::relatedness::EvidenceSource;

/// Lower bound on the overlap coefficient of two token sets whose Jaccard
/// similarity is at least `tau`.
pub fn overlap_lower_bound(size_a: usize, size_b: usize, tau: f64) -> f64 {
    let min = size_a.min(size_b).max(1) as f64;
    (tau * (size_a + size_b) as f64 / ((1.0 + tau) * min)).min(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct JoinEdge {
    /// Joining attribute on the lower-numbered dataset.
    pub low_attr: AttrId,
    /// Joining attribute on the higher-numbered dataset.
    pub high_attr: AttrId,
    pub bound: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct JoinGraph {
    adjacency: Vec<BTreeSet<DatasetIdx>>,
    edges: BTreeMap<(DatasetIdx, DatasetIdx), JoinEdge>,
}

fn key(a: DatasetIdx, b: DatasetIdx) -> (DatasetIdx, DatasetIdx) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl JoinGraph {
    pub fn new(nodes: usize) -> Self {
        JoinGraph {
            adjacency: vec![BTreeSet::new(); nodes],
            edges: BTreeMap::new(),
        }
    }

    /// Graph with placeholder join attributes, for tests and tools.
    pub fn from_edges(nodes: usize, edges: &[(u32, u32)]) -> Self {
        let mut g = JoinGraph::new(nodes);
        for &(a, b) in edges {
            g.add_edge(DatasetIdx(a), AttrId(a), DatasetIdx(b), AttrId(b), 1.0);
        }
        g
    }

    /// Add or strengthen an undirected edge. Self-loops are ignored; an
    /// existing edge keeps whichever annotation has the larger bound.
    pub fn add_edge(&mut self, a: DatasetIdx, attr_a: AttrId, b: DatasetIdx, attr_b: AttrId, bound: f64) {
        if a == b {
            return;
        }
        let (low_attr, high_attr) = if a < b { (attr_a, attr_b) } else { (attr_b, attr_a) };
        let edge = JoinEdge {
            low_attr,
            high_attr,
            bound,
        };
        self.adjacency[a.0 as usize].insert(b);
        self.adjacency[b.0 as usize].insert(a);
        self.edges
            .entry(key(a, b))
            .and_modify(|e| {
                if bound > e.bound {
                    *e = edge;
                }
            })
            .or_insert(edge);
    }

    pub fn node_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, node: DatasetIdx) -> impl Iterator<Item = DatasetIdx> + '_ {
        self.adjacency[node.0 as usize].iter().copied()
    }

    pub fn has_edge(&self, a: DatasetIdx, b: DatasetIdx) -> bool {
        self.edges.contains_key(&key(a, b))
    }

    /// Joining attributes oriented from `from` to `to`, and the bound.
    pub fn hop(&self, from: DatasetIdx, to: DatasetIdx) -> Option<(AttrId, AttrId, f64)> {
        let e = self.edges.get(&key(from, to))?;
        Some(if from < to {
            (e.low_attr, e.high_attr, e.bound)
        } else {
            (e.high_attr, e.low_attr, e.bound)
        })
    }

    pub fn edges(&self) -> impl Iterator<Item = (DatasetIdx, DatasetIdx, &JoinEdge)> {
        self.edges.iter().map(|((a, b), e)| (*a, *b, e))
    }
}

fn is_subject(catalog: &Catalog, id: AttrId) -> bool {
    catalog.dataset(catalog.dataset_of(id)).subject == Some(id)
}

/// Join graph over the whole lake from value-forest lookups of every
/// indexed attribute, `budget` neighbours each.
pub fn build_join_graph<S: EvidenceSource>(source: &S, budget: usize) -> JoinGraph {
    let catalog = source.catalog();
    let tau = 1.0 - source.threshold_distance();
    let max_distance = source.threshold_distance();
    let found: Vec<(AttrId, Vec<(AttrId, f64)>)> = (0..catalog.attributes.len() as u32)
        .into_par_iter()
        .map(AttrId)
        .filter(|id| catalog.attribute(*id).has[Evidence::Value as usize])
        .map(|id| {
            let probe = source.stored_probe(id);
            (id, source.lookup(Evidence::Value, &probe, budget, max_distance))
        })
        .collect();
    let mut graph = JoinGraph::new(catalog.datasets.len());
    for (a, hits) in found {
        let da = catalog.dataset_of(a);
        for (b, _) in hits {
            let db = catalog.dataset_of(b);
            if da == db || !(is_subject(catalog, a) || is_subject(catalog, b)) {
                continue;
            }
            let bound = overlap_lower_bound(catalog.attribute(a).tset_len, catalog.attribute(b).tset_len, tau);
            graph.add_edge(da, a, db, b, bound);
        }
    }
    graph
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct JoinPath {
    /// Start (a top-k dataset) followed by the joined datasets.
    pub nodes: Vec<DatasetIdx>,
}

impl JoinPath {
    pub fn start(&self) -> DatasetIdx {
        self.nodes[0]
    }

    pub fn hops(&self) -> usize {
        self.nodes.len() - 1
    }
}

/// Every simple path of 1..=`max_len` edges that starts at a top-k dataset
/// and continues only through datasets that are outside the top-k and in
/// `related`.
pub fn find_join_paths(
    graph: &JoinGraph,
    top_k: &[DatasetIdx],
    related: &BTreeSet<DatasetIdx>,
    max_len: usize,
) -> Vec<JoinPath> {
    let in_top: BTreeSet<DatasetIdx> = top_k.iter().copied().collect();
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in top_k {
        if !seen.insert(start) || start.0 as usize >= graph.node_count() {
            continue;
        }
        let mut path = vec![start];
        extend(graph, &in_top, related, max_len, &mut path, &mut out);
    }
    out
}

fn extend(
    graph: &JoinGraph,
    in_top: &BTreeSet<DatasetIdx>,
    related: &BTreeSet<DatasetIdx>,
    max_len: usize,
    path: &mut Vec<DatasetIdx>,
    out: &mut Vec<JoinPath>,
) {
    if path.len() > max_len {
        return;
    }
    let last = *path.last().unwrap();
    for next in graph.neighbors(last) {
        if in_top.contains(&next) || path.contains(&next) || !related.contains(&next) {
            continue;
        }
        path.push(next);
        out.push(JoinPath { nodes: path.clone() });
        extend(graph, in_top, related, max_len, path, out);
        path.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(v: &[u32]) -> Vec<DatasetIdx> {
        v.iter().map(|&i| DatasetIdx(i)).collect()
    }

    fn set(v: &[u32]) -> BTreeSet<DatasetIdx> {
        v.iter().map(|&i| DatasetIdx(i)).collect()
    }

    #[test]
    fn overlap_bound_examples() {
        assert!((overlap_lower_bound(100, 100, 0.7) - 0.7 * 200.0 / 170.0).abs() < 1e-12);
        assert!((overlap_lower_bound(50, 50, 0.999_999) - 1.0).abs() < 1e-6);
        assert_eq!(overlap_lower_bound(10, 1000, 0.7), 1.0);
    }

    #[test]
    fn chain() {
        let g = JoinGraph::from_edges(3, &[(0, 1), (1, 2)]);
        let paths = find_join_paths(&g, &ids(&[0]), &set(&[1, 2]), 3);
        let got: Vec<Vec<DatasetIdx>> = paths.into_iter().map(|p| p.nodes).collect();
        assert_eq!(got, vec![ids(&[0, 1]), ids(&[0, 1, 2])]);
    }

    #[test]
    fn top_k_neighbours_are_not_path_nodes() {
        let g = JoinGraph::from_edges(2, &[(0, 1)]);
        assert!(find_join_paths(&g, &ids(&[0, 1]), &set(&[0, 1]), 3).is_empty());
    }

    #[test]
    fn no_revisits_and_length_cap() {
        let g = JoinGraph::from_edges(4, &[(0, 1), (1, 0), (1, 2), (2, 3), (3, 1)]);
        assert_eq!(g.edge_count(), 4);
        let paths = find_join_paths(&g, &ids(&[0]), &set(&[1, 2, 3]), 2);
        assert!(paths.iter().all(|p| p.hops() <= 2));
        for p in &paths {
            let uniq: BTreeSet<_> = p.nodes.iter().collect();
            assert_eq!(uniq.len(), p.nodes.len());
        }
        assert_eq!(paths.len(), 3); // 0-1, 0-1-2, 0-1-3
    }

    #[test]
    fn unrelated_nodes_block_paths() {
        let g = JoinGraph::from_edges(3, &[(0, 1), (1, 2)]);
        assert!(find_join_paths(&g, &ids(&[0]), &set(&[2]), 3).is_empty());
    }

    #[test]
    fn edges_are_symmetric_and_keep_best_bound() {
        let mut g = JoinGraph::new(3);
        g.add_edge(DatasetIdx(2), AttrId(7), DatasetIdx(0), AttrId(1), 0.5);
        g.add_edge(DatasetIdx(0), AttrId(2), DatasetIdx(2), AttrId(8), 0.9);
        g.add_edge(DatasetIdx(1), AttrId(4), DatasetIdx(1), AttrId(5), 1.0);
        assert!(g.has_edge(DatasetIdx(0), DatasetIdx(2)) && g.has_edge(DatasetIdx(2), DatasetIdx(0)));
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.hop(DatasetIdx(2), DatasetIdx(0)), Some((AttrId(8), AttrId(2), 0.9)));
    }
}
