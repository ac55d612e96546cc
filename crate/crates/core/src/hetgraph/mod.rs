//! Heterogeneous graph data model.
//!
//! A [`HetGraph`] is an undirected graph whose nodes and edges carry type
//! indices into a dataset-global [`TypeVocab`]. Each edge is stored once with
//! `src < dst`; two nodes may be joined by several edges as long as their
//! edge types differ.

mod iso;
pub(crate) mod json;
mod wl;

pub use iso::{brute_isomorphic, BRUTE_ISO_MAX_NODES};
pub(crate) use iso::type_masks as iso_type_masks;
pub use json::{parse_graph, parse_graph_inferring, read_corpus, serialize_graph, write_corpus};
pub use wl::{typed_wl_colors, typed_wl_hash, ColorSignature};

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors raised while parsing or constructing graphs.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("malformed graph JSON: {0}")]
    Malformed(String),
    #[error("graph {graph}: unknown node type label {label:?}")]
    UnknownNodeType { graph: String, label: String },
    #[error("graph {graph}: unknown edge type label {label:?}")]
    UnknownEdgeType { graph: String, label: String },
    #[error("graph {graph}: node ids are not contiguous from 0 (offending id {id})")]
    NonContiguousIds { graph: String, id: i64 },
    #[error("graph {graph}: duplicate node id {id}")]
    DuplicateNode { graph: String, id: i64 },
    #[error("graph {graph}: edge ({src}, {dst}) references a missing node")]
    DanglingEdge { graph: String, src: i64, dst: i64 },
    #[error("graph {graph}: duplicate edge ({src}, {dst}, {label})")]
    DuplicateEdge { graph: String, src: usize, dst: usize, label: String },
    #[error("graph {graph}: self-loop on node {node}")]
    SelfLoop { graph: String, node: usize },
    #[error("duplicate type label {0:?} in vocabulary")]
    DuplicateLabel(String),
    #[error("graph has {nodes} nodes, enumeration bound is {bound}")]
    TooLarge { nodes: usize, bound: usize },
    #[error("corpus line {line}: {source}")]
    CorpusLine {
        line: usize,
        #[source]
        source: Box<GraphError>,
    },
    #[error("io error: {0}")]
    Io(String),
}

/// Ordered node-type and edge-type labels shared by every graph of a dataset.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TypeVocab {
    pub node_types: Vec<String>,
    pub edge_types: Vec<String>,
}

impl TypeVocab {
    pub fn new(node_types: Vec<String>, edge_types: Vec<String>) -> Result<Self, GraphError> {
        for labels in [&node_types, &edge_types] {
            let mut seen = HashSet::new();
            for l in labels {
                if !seen.insert(l.as_str()) {
                    return Err(GraphError::DuplicateLabel(l.clone()));
                }
            }
        }
        Ok(Self { node_types, edge_types })
    }

    /// Vocabulary with labels `N0..` and `E0..`.
    pub fn numbered(node_types: usize, edge_types: usize) -> Self {
        Self {
            node_types: (0..node_types).map(|i| format!("N{i}")).collect(),
            edge_types: (0..edge_types).map(|i| format!("E{i}")).collect(),
        }
    }

    pub fn num_node_types(&self) -> usize {
        self.node_types.len()
    }

    pub fn num_edge_types(&self) -> usize {
        self.edge_types.len()
    }

    pub fn node_index(&self, label: &str) -> Option<usize> {
        self.node_types.iter().position(|l| l == label)
    }

    pub fn edge_index(&self, label: &str) -> Option<usize> {
        self.edge_types.iter().position(|l| l == label)
    }

    /// `|C| + |R| > 2`.
    pub fn is_heterogeneous(&self) -> bool {
        self.node_types.len() + self.edge_types.len() > 2
    }

    pub fn from_json(text: &str) -> Result<Self, GraphError> {
        let v: TypeVocab =
            serde_json::from_str(text).map_err(|e| GraphError::Malformed(e.to_string()))?;
        Self::new(v.node_types, v.edge_types)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("vocab serializes")
    }
}

/// Undirected typed edge, `src < dst` for a well-formed graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub src: usize,
    pub dst: usize,
    pub ty: usize,
}

impl Edge {
    /// Builds an edge with endpoints sorted.
    pub fn new(a: usize, b: usize, ty: usize) -> Self {
        Self { src: a.min(b), dst: a.max(b), ty }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HetGraph {
    pub id: String,
    /// Node index -> node-type index.
    pub node_types: Vec<usize>,
    pub edges: Vec<Edge>,
}

impl HetGraph {
    pub fn new(id: impl Into<String>, node_types: Vec<usize>, mut edges: Vec<Edge>) -> Self {
        edges.sort();
        Self { id: id.into(), node_types, edges }
    }

    pub fn num_nodes(&self) -> usize {
        self.node_types.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Per node, the list of `(neighbor, edge type)`.
    pub fn neighbors(&self) -> Vec<Vec<(usize, usize)>> {
        let mut adj = vec![Vec::new(); self.num_nodes()];
        for e in &self.edges {
            adj[e.src].push((e.dst, e.ty));
            adj[e.dst].push((e.src, e.ty));
        }
        adj
    }

    /// Relabels nodes so that old node `i` becomes `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> HetGraph {
        assert_eq!(perm.len(), self.num_nodes());
        let mut types = vec![0; self.num_nodes()];
        for (old, &new) in perm.iter().enumerate() {
            types[new] = self.node_types[old];
        }
        let edges = self
            .edges
            .iter()
            .map(|e| Edge::new(perm[e.src], perm[e.dst], e.ty))
            .collect();
        HetGraph::new(self.id.clone(), types, edges)
    }

    /// Induced subgraph over `nodes`, re-indexed in the given order.
    pub fn induced(&self, id: impl Into<String>, nodes: &[usize]) -> HetGraph {
        let mut index = vec![usize::MAX; self.num_nodes()];
        for (new, &old) in nodes.iter().enumerate() {
            index[old] = new;
        }
        let types = nodes.iter().map(|&n| self.node_types[n]).collect();
        let edges = self
            .edges
            .iter()
            .filter(|e| index[e.src] != usize::MAX && index[e.dst] != usize::MAX)
            .map(|e| Edge::new(index[e.src], index[e.dst], e.ty))
            .collect();
        HetGraph::new(id, types, edges)
    }

    pub fn node_type_counts(&self, num_types: usize) -> Vec<usize> {
        let mut counts = vec![0; num_types];
        for &t in &self.node_types {
            if t < num_types {
                counts[t] += 1;
            }
        }
        counts
    }

    pub fn distinct_node_types(&self) -> usize {
        self.node_types.iter().collect::<HashSet<_>>().len()
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_nodes();
        if n == 0 {
            return true;
        }
        let adj = self.neighbors();
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = stack.pop() {
            for &(v, _) in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    stack.push(v);
                }
            }
        }
        count == n
    }
}

/// A single invariant violation found by [`validate_graph`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    NodeTypeOutOfRange { node: usize, ty: usize },
    EdgeTypeOutOfRange { src: usize, dst: usize, ty: usize },
    EndpointOutOfRange { src: usize, dst: usize },
    SelfLoop { node: usize },
    NotNormalized { src: usize, dst: usize },
    DuplicateEdge { src: usize, dst: usize, ty: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NodeTypeOutOfRange { node, ty } => {
                write!(f, "type out of range: node {node} has type {ty}")
            }
            Violation::EdgeTypeOutOfRange { src, dst, ty } => {
                write!(f, "type out of range: edge ({src}, {dst}) has type {ty}")
            }
            Violation::EndpointOutOfRange { src, dst } => {
                write!(f, "endpoint out of range: edge ({src}, {dst})")
            }
            Violation::SelfLoop { node } => write!(f, "self-loop on node {node}"),
            Violation::NotNormalized { src, dst } => {
                write!(f, "edge ({src}, {dst}) not stored with src < dst")
            }
            Violation::DuplicateEdge { src, dst, ty } => {
                write!(f, "duplicate edge ({src}, {dst}, {ty})")
            }
        }
    }
}

/// Reports every violated invariant of `g` against `vocab`.
pub fn validate_graph(g: &HetGraph, vocab: &TypeVocab) -> Result<(), Vec<Violation>> {
    let n = g.num_nodes();
    let mut out = Vec::new();
    for (node, &ty) in g.node_types.iter().enumerate() {
        if ty >= vocab.num_node_types() {
            out.push(Violation::NodeTypeOutOfRange { node, ty });
        }
    }
    let mut seen = HashSet::new();
    for e in &g.edges {
        if e.src >= n || e.dst >= n {
            out.push(Violation::EndpointOutOfRange { src: e.src, dst: e.dst });
        }
        if e.src == e.dst {
            out.push(Violation::SelfLoop { node: e.src });
        } else if e.src > e.dst {
            out.push(Violation::NotNormalized { src: e.src, dst: e.dst });
        }
        if e.ty >= vocab.num_edge_types() {
            out.push(Violation::EdgeTypeOutOfRange { src: e.src, dst: e.dst, ty: e.ty });
        }
        if !seen.insert(Edge::new(e.src, e.dst, e.ty)) {
            out.push(Violation::DuplicateEdge { src: e.src, dst: e.dst, ty: e.ty });
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Row-major one-hot node-type matrix, `num_nodes x |node_types|`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub values: Vec<f64>,
}

impl FeatureMatrix {
    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.cols..(r + 1) * self.cols]
    }
}

pub fn one_hot_features(g: &HetGraph, vocab: &TypeVocab) -> FeatureMatrix {
    let cols = vocab.num_node_types();
    let mut values = vec![0.0; g.num_nodes() * cols];
    for (n, &t) in g.node_types.iter().enumerate() {
        values[n * cols + t] = 1.0;
    }
    FeatureMatrix { rows: g.num_nodes(), cols, values }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vocab() -> TypeVocab {
        TypeVocab::numbered(4, 2)
    }

    #[test]
    fn validate_ok() {
        let g = HetGraph::new("g", vec![0, 1, 2], vec![Edge::new(0, 1, 0), Edge::new(1, 2, 1)]);
        assert_eq!(validate_graph(&g, &vocab()), Ok(()));
    }

    #[test]
    fn validate_reports_every_violation() {
        let g = HetGraph {
            id: "g".into(),
            node_types: vec![4, 0],
            edges: vec![
                Edge { src: 0, dst: 1, ty: 0 },
                Edge { src: 0, dst: 1, ty: 0 },
                Edge { src: 1, dst: 1, ty: 0 },
                Edge { src: 0, dst: 1, ty: 7 },
            ],
        };
        let v = validate_graph(&g, &vocab()).unwrap_err();
        assert!(v.contains(&Violation::NodeTypeOutOfRange { node: 0, ty: 4 }));
        assert!(v.contains(&Violation::DuplicateEdge { src: 0, dst: 1, ty: 0 }));
        assert!(v.contains(&Violation::SelfLoop { node: 1 }));
        assert!(v.contains(&Violation::EdgeTypeOutOfRange { src: 0, dst: 1, ty: 7 }));
        assert_eq!(v.len(), 4);
        assert!(v[0].to_string().contains("type out of range"));
        assert!(v[1].to_string().contains("duplicate edge"));
    }

    #[test]
    fn duplicate_vocab_label_rejected() {
        let err = TypeVocab::new(vec!["a".into(), "a".into()], vec![]).unwrap_err();
        assert_eq!(err, GraphError::DuplicateLabel("a".into()));
    }

    #[test]
    fn one_hot_rows() {
        let g = HetGraph::new("g", vec![2, 0, 2, 3], vec![]);
        let x = one_hot_features(&g, &vocab());
        assert_eq!(x.row(0), &[0.0, 0.0, 1.0, 0.0]);
        for r in 0..x.rows {
            assert_eq!(x.row(r).iter().sum::<f64>(), 1.0);
        }
        let mut col_sums = vec![0.0; x.cols];
        for r in 0..x.rows {
            for c in 0..x.cols {
                col_sums[c] += x.row(r)[c];
            }
        }
        let counts = g.node_type_counts(4);
        for c in 0..4 {
            assert_eq!(col_sums[c], counts[c] as f64);
        }
    }

    #[test]
    fn same_type_rows_identical() {
        let g = HetGraph::new("g", vec![1; 5], vec![]);
        let x = one_hot_features(&g, &vocab());
        for r in 1..5 {
            assert_eq!(x.row(r), x.row(0));
        }
    }

    #[test]
    fn permuted_and_induced() {
        let g = HetGraph::new("g", vec![0, 1, 2], vec![Edge::new(0, 1, 0), Edge::new(1, 2, 1)]);
        let p = g.permuted(&[2, 0, 1]);
        assert_eq!(p.node_types, vec![1, 2, 0]);
        assert!(p.edges.contains(&Edge::new(2, 0, 0)));
        let sub = g.induced("s", &[2, 1]);
        assert_eq!(sub.node_types, vec![2, 1]);
        assert_eq!(sub.edges, vec![Edge::new(0, 1, 1)]);
        assert!(g.is_connected());
        assert!(!HetGraph::new("d", vec![0, 0], vec![]).is_connected());
    }
}
