use super::{affine, mlp2, GraphInput, MaskMode, ModelConfig, ModelError};
use crate::tensor::{Axis, ParamStore, Tape, Tensor, Var};

/// Per-type sum pooling, `[|C|, d]`; absent types give zero rows.
pub fn type_pool(t: &mut Tape, z: Var, g: &GraphInput) -> Result<Var, ModelError> {
    let (n, c) = (g.num_nodes(), g.features.shape()[1]);
    let mut ft = Tensor::zeros(&[c, n]);
    for (v, &ty) in g.types.iter().enumerate() {
        ft.data_mut()[ty * n + v] = 1.0;
    }
    let ft = t.constant(&ft);
    Ok(t.matmul(ft, z)?)
}

/// Graph-level matching of two type pools.
///
/// Each type's pair `[t_i, t_j]` (graph `i` first) is mapped by an MLP to
/// `t_c`, a global context `a = tanh(mean_c(t_c) W_a)` weighs the types by
/// `σ(t_c · a)`, and the weighted sum goes through the output MLP.
pub fn graph_match<'a>(t: &mut Tape<'a>, p: &'a ParamStore, ti: Var, tj: Var) -> Result<Var, ModelError> {
    let x = t.concat(&[ti, tj])?;
    if t.shape(ti) != t.shape(tj) {
        return Err(ModelError::InvalidConfig(format!(
            "type pools disagree: {:?} vs {:?}",
            t.shape(ti),
            t.shape(tj)
        )));
    }
    let c = t.shape(ti)[0];
    let tc = mlp2(t, p, "gm.pair", x)?;
    let total = t.sum(tc, Axis::Rows)?;
    let mean = t.scale(total, 1.0 / c as f64);
    let wa = t.param(p, "gm.attn")?;
    let ctx = t.matmul(mean, wa)?;
    let a = t.tanh(ctx);
    let at = t.transpose(a)?;
    let scores = t.matmul(tc, at)?;
    let weights = t.sigmoid(scores);
    let wt = t.transpose(weights)?;
    let h = t.matmul(wt, tc)?;
    mlp2(t, p, "gm.out", h)
}

/// Handles recorded by [`node_match`], in channel order: `H` heads of
/// `i → j`, then `H` heads of `j → i`.
#[derive(Debug, Clone)]
pub struct NodeMatchTrace {
    pub s_prime: Var,
    /// Padded `[N, N]` cross-attention similarity per channel.
    pub cross: Vec<Var>,
    /// Per channel after alignment self-attention.
    pub aligned: Vec<Var>,
    /// Per channel 0/1 mask: same type and both nodes real.
    pub masks: Vec<Vec<f64>>,
}

fn selector(rows: usize, cols: usize) -> Tensor {
    let mut s = Tensor::zeros(&[rows, cols]);
    for k in 0..rows.min(cols) {
        s.data_mut()[k * cols + k] = 1.0;
    }
    s
}

struct Side<'a> {
    g: &'a GraphInput,
    q: Var,
    k: Var,
    /// `[N, n]`, embeds rows into the padded image.
    pad_rows: Var,
    /// `[n, N]`, embeds columns.
    pad_cols: Var,
}

impl<'a> Side<'a> {
    fn new(t: &mut Tape, z: Var, g: &'a GraphInput, wq: Var, wk: Var, n: usize) -> Result<Self, ModelError> {
        let m = g.num_nodes();
        Ok(Self {
            g,
            q: t.matmul(z, wq)?,
            k: t.matmul(z, wk)?,
            pad_rows: t.constant(&selector(n, m)),
            pad_cols: t.constant(&selector(m, n)),
        })
    }
}

/// Node-level matching through type-masked multi-head cross attention,
/// alignment self-attention and a two-stage CNN readout.
pub fn node_match<'a>(
    t: &mut Tape<'a>,
    p: &'a ParamStore,
    cfg: &ModelConfig,
    zi: Var,
    zj: Var,
    gi: &GraphInput,
    gj: &GraphInput,
) -> Result<NodeMatchTrace, ModelError> {
    let n = cfg.pad_size();
    for g in [gi, gj] {
        if g.num_nodes() > n {
            return Err(ModelError::TooLarge { id: g.id.clone(), nodes: g.num_nodes(), max: n });
        }
    }
    let heads = cfg.heads;
    let dk = cfg.hidden_dim / heads;
    let wq = t.param(p, "nm.query")?;
    let wk = t.param(p, "nm.key")?;
    let si = Side::new(t, zi, gi, wq, wk, n)?;
    let sj = Side::new(t, zj, gj, wq, wk, n)?;

    let mut cross = Vec::with_capacity(2 * heads);
    let mut masks = Vec::with_capacity(2 * heads);
    let mut real_rows = Vec::with_capacity(2 * heads);
    for (a, b) in [(&si, &sj), (&sj, &si)] {
        let (na, nb) = (a.g.num_nodes(), b.g.num_nodes());
        let small: Vec<f64> = (0..na * nb)
            .map(|x| if a.g.types[x / nb] == b.g.types[x % nb] { 1.0 } else { 0.0 })
            .collect();
        let mut padded = vec![0.0; n * n];
        for r in 0..na {
            padded[r * n..r * n + nb].copy_from_slice(&small[r * nb..(r + 1) * nb]);
        }
        for h in 0..heads {
            let qh = t.cols(a.q, h * dk, dk)?;
            let kh = t.cols(b.k, h * dk, dk)?;
            let kt = t.transpose(kh)?;
            let logits = t.matmul(qh, kt)?;
            let logits = t.scale(logits, 1.0 / (dk as f64).sqrt());
            let soft = match cfg.mask_mode {
                MaskMode::Multiplicative => t.row_softmax(logits),
                MaskMode::Additive => t.masked_row_softmax(logits, &small)?,
            };
            let s = t.mask_mul(soft, &small)?;
            let s = t.matmul(s, b.pad_cols)?;
            let s = t.matmul(a.pad_rows, s)?;
            cross.push(s);
            masks.push(padded.clone());
            real_rows.push(na);
        }
    }

    let aq = t.param(p, "nm.align.query")?;
    let ak = t.param(p, "nm.align.key")?;
    let av = t.param(p, "nm.align.value")?;
    let mut aligned = Vec::with_capacity(cross.len());
    for ((&x, mask), &rows) in cross.iter().zip(&masks).zip(&real_rows) {
        let q = t.matmul(x, aq)?;
        let k = t.matmul(x, ak)?;
        let v = t.matmul(x, av)?;
        let kt = t.transpose(k)?;
        let logits = t.matmul(q, kt)?;
        let logits = t.scale(logits, 1.0 / (n as f64).sqrt());
        let keep: Vec<f64> = (0..n * n).map(|e| if e % n < rows { 1.0 } else { 0.0 }).collect();
        let att = t.masked_row_softmax(logits, &keep)?;
        let y = t.matmul(att, v)?;
        aligned.push(t.mask_mul(y, mask)?);
    }

    let flat: Vec<Var> = aligned.iter().map(|&a| t.flatten(a)).collect();
    let img = t.concat(&flat)?;
    let mut x = t.reshape(img, &[2 * heads, n, n])?;
    for i in 0..super::CONV_CHANNELS.len() {
        let w = t.param(p, &format!("nm.conv{i}.w"))?;
        let b = t.param(p, &format!("nm.conv{i}.b"))?;
        let c = t.conv2d(x, w, b)?;
        let r = t.relu(c);
        x = t.maxpool2d(r)?;
    }
    let f = t.flatten(x);
    let s_prime = affine(t, p, "nm.out", f)?;
    Ok(NodeMatchTrace { s_prime, cross, aligned, masks })
}
