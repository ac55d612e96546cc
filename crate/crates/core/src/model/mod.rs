//! The heterogeneous graph matching network.
//!
//! Both graphs go through a shared relational GIN encoder. Per-type sum
//! pools are matched at graph level, node embeddings are matched through
//! type-masked cross attention read out by a small CNN, and the two matching
//! vectors feed a fully connected head that predicts a similarity in (0, 1).
//!
//! Node embeddings use the row-vector convention: a relation matrix acts as
//! `z · W_r`.

mod encoder;
mod head;
mod input;
mod matching;

pub use encoder::{encode, gin_layer, hgin_layer, relation_matrices};
pub use head::{mse_loss, predict};
pub use input::{canonical_order, GraphInput};
pub use matching::{graph_match, node_match, type_pool, NodeMatchTrace};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hetgraph::HetGraph;
use crate::tensor::{ParamStore, Tape, Tensor, TensorError, Var};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("graph {id:?} has {nodes} nodes, more than max_nodes = {max}")]
    TooLarge { id: String, nodes: usize, max: usize },
    #[error("graph {0:?} has no nodes")]
    EmptyGraph(String),
    #[error("graph {id:?} uses {what} type {ty}, outside the configured {limit}")]
    TypeOutOfRange { id: String, what: &'static str, ty: usize, limit: usize },
    #[error("invalid model configuration: {0}")]
    InvalidConfig(String),
}

/// How relation messages are scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormMode {
    /// Divide by the node's neighbor count under that relation.
    #[default]
    Degree,
    None,
}

/// How the type mask enters the cross-attention softmax.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaskMode {
    /// Softmax over all real nodes, then multiply by the mask.
    #[default]
    Multiplicative,
    /// Softmax over same-type nodes only.
    Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EncoderKind {
    #[default]
    Hgin,
    /// All edge types collapsed to one relation.
    GinAblation,
}

/// Which matching tiers feed the head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Variant {
    #[default]
    Full,
    /// Node matching replaced by a zero vector; used for timing.
    GraphMatchOnly,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub node_types: usize,
    pub edge_types: usize,
    pub layers: usize,
    pub hidden_dim: usize,
    pub basis_count: usize,
    pub heads: usize,
    pub graph_match_dim: usize,
    pub node_match_dim: usize,
    pub fcl_dims: Vec<usize>,
    pub max_nodes: usize,
    pub normalization: NormMode,
    pub mask_mode: MaskMode,
    pub encoder: EncoderKind,
}

/// Output channels of the two readout convolutions.
pub const CONV_CHANNELS: [usize; 2] = [8, 16];
/// Smallest padding size that survives two 2×2 poolings.
pub const MIN_PAD: usize = 4;

impl ModelConfig {
    pub fn new(node_types: usize, edge_types: usize) -> Self {
        Self {
            node_types,
            edge_types,
            layers: 3,
            hidden_dim: 64,
            basis_count: 4,
            heads: 4,
            graph_match_dim: 128,
            node_match_dim: 128,
            fcl_dims: vec![128, 64, 32, 1],
            max_nodes: 16,
            normalization: NormMode::Degree,
            mask_mode: MaskMode::Multiplicative,
            encoder: EncoderKind::Hgin,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |m: String| Err(ModelError::InvalidConfig(m));
        let counts = [
            ("node_types", self.node_types),
            ("edge_types", self.edge_types),
            ("layers", self.layers),
            ("hidden_dim", self.hidden_dim),
            ("basis_count", self.basis_count),
            ("heads", self.heads),
            ("graph_match_dim", self.graph_match_dim),
            ("node_match_dim", self.node_match_dim),
            ("max_nodes", self.max_nodes),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{name} must be positive"));
        }
        if self.hidden_dim % self.heads != 0 {
            return bad(format!("hidden_dim {} is not divisible by heads {}", self.hidden_dim, self.heads));
        }
        if self.fcl_dims.last() != Some(&1) || self.fcl_dims.contains(&0) {
            return bad(format!("fcl_dims {:?} must be positive and end in 1", self.fcl_dims));
        }
        Ok(())
    }

    /// Number of relations seen by the encoder.
    pub fn relations(&self) -> usize {
        match self.encoder {
            EncoderKind::Hgin => self.edge_types,
            EncoderKind::GinAblation => 1,
        }
    }

    /// Side of the similarity images.
    pub fn pad_size(&self) -> usize {
        self.max_nodes.max(MIN_PAD)
    }

    /// `(d_in, d_out)` of each encoder layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        (0..self.layers)
            .map(|l| (if l == 0 { self.node_types } else { self.hidden_dim }, self.hidden_dim))
            .collect()
    }

    fn conv_out_len(&self) -> usize {
        let s = self.pad_size() / 2 / 2;
        CONV_CHANNELS[1] * s * s
    }
}

struct Init {
    rng: ChaCha8Rng,
    p: ParamStore,
}

impl Init {
    fn matrix(&mut self, name: impl Into<String>, rows: usize, cols: usize) {
        let t = Tensor::glorot(&[rows, cols], rows, cols, &mut self.rng);
        self.p.insert(name, t);
    }

    fn affine(&mut self, prefix: &str, din: usize, dout: usize) {
        self.matrix(format!("{prefix}.w"), din, dout);
        self.p.insert(format!("{prefix}.b"), Tensor::zeros(&[1, dout]));
    }
}

/// Glorot-initialized parameters for `cfg`: matrices uniform, biases and
/// every `ε` zero.
pub fn init_params(cfg: &ModelConfig, seed: u64) -> Result<ParamStore, ModelError> {
    cfg.validate()?;
    let mut it = Init { rng: ChaCha8Rng::seed_from_u64(seed), p: ParamStore::new() };
    let (r, b) = (cfg.relations(), cfg.basis_count);
    for (l, (din, dout)) in cfg.layer_dims().into_iter().enumerate() {
        let pre = format!("enc.{l}");
        it.p.insert(format!("{pre}.eps"), Tensor::zeros(&[1]));
        let mut basis = Vec::with_capacity(b * din * din);
        for _ in 0..b {
            basis.extend(Tensor::glorot(&[din, din], din, din, &mut it.rng).into_data());
        }
        it.p.insert(format!("{pre}.basis"), Tensor::new(vec![b, din * din], basis)?);
        it.matrix(format!("{pre}.coef"), r, b);
        it.affine(&format!("{pre}.mlp0"), din, dout);
        it.affine(&format!("{pre}.mlp1"), dout, dout);
    }
    let d = cfg.hidden_dim;
    it.affine("gm.pair0", 2 * d, d);
    it.affine("gm.pair1", d, d);
    it.matrix("gm.attn", d, d);
    it.affine("gm.out0", d, cfg.graph_match_dim);
    it.affine("gm.out1", cfg.graph_match_dim, cfg.graph_match_dim);

    it.matrix("nm.query", d, d);
    it.matrix("nm.key", d, d);
    let n = cfg.pad_size();
    for w in ["nm.align.query", "nm.align.key", "nm.align.value"] {
        it.matrix(w, n, n);
    }
    let mut cin = 2 * cfg.heads;
    for (i, &cout) in CONV_CHANNELS.iter().enumerate() {
        let t = Tensor::glorot(&[cout, cin, 3, 3], cin * 9, cout * 9, &mut it.rng);
        it.p.insert(format!("nm.conv{i}.w"), t);
        it.p.insert(format!("nm.conv{i}.b"), Tensor::zeros(&[cout]));
        cin = cout;
    }
    it.affine("nm.out", cfg.conv_out_len(), cfg.node_match_dim);

    let mut width = cfg.graph_match_dim + cfg.node_match_dim;
    for (i, &o) in cfg.fcl_dims.iter().enumerate() {
        it.affine(&format!("head.{i}"), width, o);
        width = o;
    }
    Ok(it.p)
}

/// `x · W + b` with parameters `{prefix}.w` and `{prefix}.b`.
pub(crate) fn affine<'a>(t: &mut Tape<'a>, p: &'a ParamStore, prefix: &str, x: Var) -> Result<Var, ModelError> {
    let w = t.param(p, &format!("{prefix}.w"))?;
    let b = t.param(p, &format!("{prefix}.b"))?;
    let y = t.matmul(x, w)?;
    Ok(t.add(y, b)?)
}

/// Two affine maps with ReLU between.
pub(crate) fn mlp2<'a>(t: &mut Tape<'a>, p: &'a ParamStore, prefix: &str, x: Var) -> Result<Var, ModelError> {
    let h = affine(t, p, &format!("{prefix}0"), x)?;
    let h = t.relu(h);
    affine(t, p, &format!("{prefix}1"), h)
}

/// The full network: configuration plus forward passes over prepared inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct HeGMN {
    pub cfg: ModelConfig,
}

impl HeGMN {
    pub fn new(cfg: ModelConfig) -> Result<Self, ModelError> {
        cfg.validate()?;
        Ok(Self { cfg })
    }

    pub fn prepare(&self, g: &HetGraph) -> Result<GraphInput, ModelError> {
        GraphInput::canonical(g, &self.cfg)
    }

    /// Records the prediction `ŝ` for one pair; returns a `[1, 1]` handle.
    pub fn forward<'a>(
        &self,
        t: &mut Tape<'a>,
        p: &'a ParamStore,
        gi: &GraphInput,
        gj: &GraphInput,
        variant: Variant,
    ) -> Result<Var, ModelError> {
        let zi = encode(t, p, &self.cfg, gi)?;
        let zj = encode(t, p, &self.cfg, gj)?;
        let ti = type_pool(t, zi, gi)?;
        let tj = type_pool(t, zj, gj)?;
        let h = graph_match(t, p, ti, tj)?;
        let s = match variant {
            Variant::Full => node_match(t, p, &self.cfg, zi, zj, gi, gj)?.s_prime,
            Variant::GraphMatchOnly => t.constant(&Tensor::zeros(&[1, self.cfg.node_match_dim])),
        };
        predict(t, p, h, s)
    }

    /// Squared error of one pair against `target`.
    pub fn pair_loss<'a>(
        &self,
        t: &mut Tape<'a>,
        p: &'a ParamStore,
        gi: &GraphInput,
        gj: &GraphInput,
        target: f64,
    ) -> Result<Var, ModelError> {
        let pred = self.forward(t, p, gi, gj, Variant::Full)?;
        let y = t.constant(&Tensor::scalar(target));
        mse_loss(t, &[pred], &[y])
    }

    pub fn score(&self, p: &ParamStore, gi: &GraphInput, gj: &GraphInput, variant: Variant) -> Result<f64, ModelError> {
        let mut t = Tape::new();
        let s = self.forward(&mut t, p, gi, gj, variant)?;
        Ok(t.value(s)[0])
    }
}
