use super::{relation_matrices, ModelConfig, ModelError};
use crate::hetgraph::{typed_wl_colors, HetGraph};
use crate::tensor::Tensor;

/// Per-graph constants of a forward pass, computed once and reused.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphInput {
    pub id: String,
    pub types: Vec<usize>,
    /// One-hot node types, `[n, |C|]`.
    pub features: Tensor,
    /// Scaled adjacency per relation, `[n, n]` each.
    pub relations: Vec<Tensor>,
    /// `order[k]` is the original index of the node at position `k`.
    pub order: Vec<usize>,
}

/// Nodes sorted by type, then stable typed-WL color, then index.
///
/// Node matching reads similarity matrices as images, so rows must appear in
/// an order that does not depend on the input labeling. Nodes tied on both
/// keys receive identical embeddings from the encoder, so their relative
/// order does not change the image.
pub fn canonical_order(g: &HetGraph) -> Vec<usize> {
    let colors = typed_wl_colors(g, g.num_nodes());
    let mut order: Vec<usize> = (0..g.num_nodes()).collect();
    order.sort_by_key(|&v| (g.node_types[v], colors[v], v));
    order
}

impl GraphInput {
    /// Keeps the graph's own node order.
    pub fn new(g: &HetGraph, cfg: &ModelConfig) -> Result<Self, ModelError> {
        Self::build(g, cfg, (0..g.num_nodes()).collect())
    }

    /// Reorders nodes by [`canonical_order`].
    pub fn canonical(g: &HetGraph, cfg: &ModelConfig) -> Result<Self, ModelError> {
        Self::build(g, cfg, canonical_order(g))
    }

    fn build(g: &HetGraph, cfg: &ModelConfig, order: Vec<usize>) -> Result<Self, ModelError> {
        let n = g.num_nodes();
        if n == 0 {
            return Err(ModelError::EmptyGraph(g.id.clone()));
        }
        if n > cfg.max_nodes {
            return Err(ModelError::TooLarge { id: g.id.clone(), nodes: n, max: cfg.max_nodes });
        }
        let out_of_range = |what, ty, limit| ModelError::TypeOutOfRange { id: g.id.clone(), what, ty, limit };
        if let Some(&t) = g.node_types.iter().find(|&&t| t >= cfg.node_types) {
            return Err(out_of_range("node", t, cfg.node_types));
        }
        if let Some(e) = g.edges.iter().find(|e| e.ty >= cfg.edge_types) {
            return Err(out_of_range("edge", e.ty, cfg.edge_types));
        }
        let mut perm = vec![0; n];
        for (pos, &v) in order.iter().enumerate() {
            perm[v] = pos;
        }
        let h = g.permuted(&perm);
        let mut features = Tensor::zeros(&[n, cfg.node_types]);
        for (v, &t) in h.node_types.iter().enumerate() {
            features.data_mut()[v * cfg.node_types + t] = 1.0;
        }
        Ok(Self {
            id: g.id.clone(),
            types: h.node_types.clone(),
            features,
            relations: relation_matrices(&h, cfg.relations(), cfg.normalization),
            order,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.types.len()
    }
}
