//! Heterogeneous circRNA-disease graph built by thresholding similarities.
//!
//! Node index space: circRNAs occupy `0..n_circ`, diseases follow at
//! `n_circ..n_circ + n_disease`. The adjacency is binary, undirected, stored
//! symmetrically in CSR form with sorted, duplicate-free rows and no
//! self-edges.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::alignment::SimilarityMatrix;
use crate::error::{Error, Result};
use crate::ingest::AssociationMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NodeKind {
    Circ,
    Disease,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeKind {
    /// circRNA - circRNA similarity edge.
    CircCirc,
    /// disease - disease similarity edge.
    DiseaseDisease,
    /// Known (training) association edge.
    CircDisease,
}

impl EdgeKind {
    pub fn code(&self) -> &'static str {
        match self {
            EdgeKind::CircCirc => "cc",
            EdgeKind::DiseaseDisease => "dd",
            EdgeKind::CircDisease => "cd",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphConfig {
    pub gamma: f64,
    pub include_disease_edges: bool,
    pub include_assoc_edges: bool,
}

impl Default for GraphConfig {
    fn default() -> Self {
        Self {
            gamma: 0.5,
            include_disease_edges: true,
            include_assoc_edges: true,
        }
    }
}

impl GraphConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::Usage(format!(
                "gamma must be in [0,1], got {}",
                self.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n_circ: usize,
    n_disease: usize,
    node_ids: Vec<String>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
}

impl Graph {
    /// Builds a graph from undirected edges. Self-edges and duplicates are dropped.
    pub fn from_edges(
        n_circ: usize,
        n_disease: usize,
        node_ids: Vec<String>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self> {
        let n = n_circ + n_disease;
        if node_ids.len() != n {
            return Err(Error::Data(format!(
                "{} node ids for {n} nodes",
                node_ids.len()
            )));
        }
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Data(format!(
                    "edge ({u},{v}) out of range for {n} nodes"
                )));
            }
            if u != v {
                adj[u].push(v);
                adj[v].push(u);
            }
        }
        let mut offsets = Vec::with_capacity(n + 1);
        let mut neighbors = Vec::new();
        offsets.push(0);
        for mut row in adj {
            row.sort_unstable();
            row.dedup();
            neighbors.extend(row);
            offsets.push(neighbors.len());
        }
        Ok(Self {
            n_circ,
            n_disease,
            node_ids,
            offsets,
            neighbors,
        })
    }

    pub fn n_circ(&self) -> usize {
        self.n_circ
    }

    pub fn n_disease(&self) -> usize {
        self.n_disease
    }

    pub fn n_nodes(&self) -> usize {
        self.n_circ + self.n_disease
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn node_kind(&self, v: usize) -> NodeKind {
        if v < self.n_circ {
            NodeKind::Circ
        } else {
            NodeKind::Disease
        }
    }

    pub fn edge_kind(&self, u: usize, v: usize) -> EdgeKind {
        match (self.node_kind(u), self.node_kind(v)) {
            (NodeKind::Circ, NodeKind::Circ) => EdgeKind::CircCirc,
            (NodeKind::Disease, NodeKind::Disease) => EdgeKind::DiseaseDisease,
            _ => EdgeKind::CircDisease,
        }
    }

    /// Sorted neighbors of `v`.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&v).is_ok()
    }

    pub fn n_edges(&self) -> usize {
        self.neighbors.len() / 2
    }

    /// Each undirected edge once, with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n_nodes()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| u < v)
                .map(move |v| (u, v))
        })
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }

    pub fn column_indices(&self) -> &[usize] {
        &self.neighbors
    }

    /// Symmetric, sorted, duplicate-free, no self-edges.
    pub fn is_well_formed(&self) -> bool {
        (0..self.n_nodes()).all(|u| {
            let row = self.neighbors(u);
            row.windows(2).all(|w| w[0] < w[1])
                && row
                    .iter()
                    .all(|&v| v != u && v < self.n_nodes() && self.has_edge(v, u))
        })
    }

    pub fn edge_list_csv(&self) -> String {
        let mut out = String::from("src_id,dst_id,kind\n");
        for (u, v) in self.edges() {
            writeln!(
                out,
                "{},{},{}",
                self.node_ids[u],
                self.node_ids[v],
                self.edge_kind(u, v).code()
            )
            .expect("write to string");
        }
        out
    }

    pub fn write_edge_list(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.edge_list_csv()).map_err(|e| Error::io(path, e))
    }
}

/// Builds the graph: circ-circ edges where `fused > gamma`, disease-disease
/// edges where `dg > gamma`, and circ-disease edges for every training
/// association. Thresholds are strict.
pub fn build_graph(
    fused: &SimilarityMatrix,
    dg: &SimilarityMatrix,
    as_train: &AssociationMatrix,
    cfg: &GraphConfig,
) -> Result<Graph> {
    cfg.validate()?;
    let n_circ = as_train.n_circ();
    let n_disease = as_train.n_disease();
    if fused.n() != n_circ || dg.n() != n_disease {
        return Err(Error::Data(format!(
            "similarity dimensions ({}, {}) do not match associations ({n_circ}, {n_disease})",
            fused.n(),
            dg.n()
        )));
    }
    let mut edges = Vec::new();
    for i in 0..n_circ {
        for j in i + 1..n_circ {
            if fused.get(i, j) > cfg.gamma {
                edges.push((i, j));
            }
        }
    }
    if cfg.include_disease_edges {
        for i in 0..n_disease {
            for j in i + 1..n_disease {
                if dg.get(i, j) > cfg.gamma {
                    edges.push((n_circ + i, n_circ + j));
                }
            }
        }
    }
    if cfg.include_assoc_edges {
        for (i, j) in as_train.pairs() {
            edges.push((i, n_circ + j));
        }
    }
    let node_ids = as_train
        .circ_ids()
        .iter()
        .chain(as_train.disease_ids())
        .cloned()
        .collect();
    Graph::from_edges(n_circ, n_disease, node_ids, edges)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphStats {
    pub n_circ: usize,
    pub n_disease: usize,
    pub edges_by_kind: BTreeMap<EdgeKind, usize>,
    pub n_edges: usize,
    pub degrees: Vec<usize>,
    /// degree -> number of nodes with that degree
    pub degree_histogram: BTreeMap<usize, usize>,
    pub isolated: usize,
}

pub fn graph_stats(g: &Graph) -> GraphStats {
    let mut edges_by_kind = BTreeMap::new();
    for kind in [
        EdgeKind::CircCirc,
        EdgeKind::DiseaseDisease,
        EdgeKind::CircDisease,
    ] {
        edges_by_kind.insert(kind, 0);
    }
    for (u, v) in g.edges() {
        *edges_by_kind.entry(g.edge_kind(u, v)).or_default() += 1;
    }
    let degrees: Vec<usize> = (0..g.n_nodes()).map(|v| g.degree(v)).collect();
    let mut degree_histogram = BTreeMap::new();
    for &d in &degrees {
        *degree_histogram.entry(d).or_default() += 1;
    }
    GraphStats {
        n_circ: g.n_circ(),
        n_disease: g.n_disease(),
        edges_by_kind,
        n_edges: g.n_edges(),
        isolated: degrees.iter().filter(|&&d| d == 0).count(),
        degrees,
        degree_histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2};
    use proptest::prelude::*;

    fn sim(ids: &[&str], values: Array2<f64>) -> SimilarityMatrix {
        SimilarityMatrix::new(ids.iter().map(|s| s.to_string()).collect(), values).unwrap()
    }

    fn three_node() -> (SimilarityMatrix, SimilarityMatrix, AssociationMatrix) {
        let fused = sim(&["c0", "c1"], arr2(&[[1.0, 0.9], [0.9, 1.0]]));
        let dg = sim(&["d0"], arr2(&[[1.0]]));
        let assoc = AssociationMatrix::new(
            vec!["c0".into(), "c1".into()],
            vec!["d0".into()],
            arr2(&[[1], [0]]),
        )
        .unwrap();
        (fused, dg, assoc)
    }

    #[test]
    fn three_rules() {
        let (fused, dg, assoc) = three_node();
        let g = build_graph(&fused, &dg, &assoc, &GraphConfig::default()).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), [(0, 1), (0, 2)]);
        assert!(g.is_well_formed());
        assert_eq!(
            g.edge_list_csv(),
            "src_id,dst_id,kind\nc0,c1,cc\nc0,d0,cd\n"
        );
    }

    #[test]
    fn gamma_one_keeps_only_associations() {
        let (_, dg, assoc) = three_node();
        let fused = sim(&["c0", "c1"], arr2(&[[1.0, 1.0], [1.0, 1.0]]));
        let cfg = GraphConfig {
            gamma: 1.0,
            ..GraphConfig::default()
        };
        let g = build_graph(&fused, &dg, &assoc, &cfg).unwrap();
        assert_eq!(g.edges().collect::<Vec<_>>(), [(0, 2)]);
    }

    #[test]
    fn threshold_is_strict() {
        let (_, dg, assoc) = three_node();
        let fused = sim(&["c0", "c1"], arr2(&[[1.0, 0.5], [0.5, 1.0]]));
        let g = build_graph(&fused, &dg, &assoc, &GraphConfig::default()).unwrap();
        assert!(!g.has_edge(0, 1));
    }

    #[test]
    fn empty_graph_is_valid() {
        let (fused, dg, _) = three_node();
        let assoc = AssociationMatrix::new(
            vec!["c0".into(), "c1".into()],
            vec!["d0".into()],
            Array2::zeros((2, 1)),
        )
        .unwrap();
        let cfg = GraphConfig {
            gamma: 0.95,
            ..GraphConfig::default()
        };
        let g = build_graph(&fused, &dg, &assoc, &cfg).unwrap();
        assert_eq!(g.n_edges(), 0);
        assert!(g.is_well_formed());
        let stats = graph_stats(&g);
        assert_eq!(stats.isolated, 3);
        assert_eq!(stats.n_edges, 0);
    }

    #[test]
    fn dimension_mismatch() {
        let (fused, _, assoc) = three_node();
        let dg = SimilarityMatrix::identity(vec!["d0".into(), "d1".into()]);
        assert!(build_graph(&fused, &dg, &assoc, &GraphConfig::default()).is_err());
    }

    #[test]
    fn toggles() {
        let fused = SimilarityMatrix::identity(vec!["c0".into()]);
        let dg = sim(&["d0", "d1"], arr2(&[[1.0, 0.8], [0.8, 1.0]]));
        let assoc = AssociationMatrix::new(
            vec!["c0".into()],
            vec!["d0".into(), "d1".into()],
            arr2(&[[1, 1]]),
        )
        .unwrap();
        let all = build_graph(&fused, &dg, &assoc, &GraphConfig::default()).unwrap();
        assert_eq!(all.n_edges(), 3);
        let cfg = GraphConfig {
            include_disease_edges: false,
            ..GraphConfig::default()
        };
        assert_eq!(build_graph(&fused, &dg, &assoc, &cfg).unwrap().n_edges(), 2);
        let cfg = GraphConfig {
            include_assoc_edges: false,
            ..GraphConfig::default()
        };
        assert_eq!(build_graph(&fused, &dg, &assoc, &cfg).unwrap().n_edges(), 1);
    }

    #[test]
    fn stats_examples() {
        let (fused, dg, assoc) = three_node();
        let g = build_graph(&fused, &dg, &assoc, &GraphConfig::default()).unwrap();
        let stats = graph_stats(&g);
        assert_eq!(stats.n_edges, 2);
        assert_eq!(stats.degrees, [2, 1, 1]);
        assert_eq!(stats.edges_by_kind[&EdgeKind::CircCirc], 1);
        assert_eq!(stats.edges_by_kind[&EdgeKind::CircDisease], 1);
        assert_eq!(stats.isolated, 0);

        let k = 5;
        let ids = (0..=k).map(|i| format!("n{i}")).collect();
        let star = Graph::from_edges(k + 1, 0, ids, (1..=k).map(|leaf| (0, leaf))).unwrap();
        let stats = graph_stats(&star);
        assert_eq!(stats.degrees[0], k);
        assert_eq!(stats.degree_histogram[&k], 1);
        assert_eq!(stats.degree_histogram[&1], k);
    }

    fn random_instance() -> impl Strategy<Value = (Array2<f64>, Array2<f64>, Array2<u8>)> {
        (1usize..8, 1usize..6).prop_flat_map(|(nc, nd)| {
            (
                prop::collection::vec(0.0f64..1.0, nc * nc),
                prop::collection::vec(0.0f64..1.0, nd * nd),
                prop::collection::vec(0u8..=1, nc * nd),
            )
                .prop_map(move |(c, d, a)| {
                    let sym = |v: Vec<f64>, n: usize| {
                        let m = Array2::from_shape_vec((n, n), v).unwrap();
                        let mut s = (&m + &m.t()) / 2.0;
                        s.diag_mut().fill(1.0);
                        s
                    };
                    (
                        sym(c, nc),
                        sym(d, nd),
                        Array2::from_shape_vec((nc, nd), a).unwrap(),
                    )
                })
        })
    }

    fn build(c: &Array2<f64>, d: &Array2<f64>, a: &Array2<u8>, gamma: f64) -> Graph {
        let cids: Vec<String> = (0..c.nrows()).map(|i| format!("c{i}")).collect();
        let dids: Vec<String> = (0..d.nrows()).map(|i| format!("d{i}")).collect();
        let fused = SimilarityMatrix::new(cids.clone(), c.clone()).unwrap();
        let dg = SimilarityMatrix::new(dids.clone(), d.clone()).unwrap();
        let assoc = AssociationMatrix::new(cids, dids, a.clone()).unwrap();
        let cfg = GraphConfig {
            gamma,
            ..GraphConfig::default()
        };
        build_graph(&fused, &dg, &assoc, &cfg).unwrap()
    }

    proptest! {
        #[test]
        fn structure_and_gamma_monotonicity(
            (c, d, a) in random_instance(),
            g1 in 0.0f64..=1.0,
            g2 in 0.0f64..=1.0,
        ) {
            let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
            let dense = build(&c, &d, &a, lo);
            let sparse = build(&c, &d, &a, hi);
            prop_assert!(dense.is_well_formed());
            prop_assert!(sparse.is_well_formed());
            for (u, v) in sparse.edges() {
                prop_assert!(dense.has_edge(u, v));
            }
            let assoc_edges = |g: &Graph| -> Vec<(usize, usize)> {
                g.edges().filter(|&(u, v)| g.edge_kind(u, v) == EdgeKind::CircDisease).collect()
            };
            prop_assert_eq!(assoc_edges(&dense), assoc_edges(&sparse));
        }
    }
}
