use super::{mlp2, GraphInput, ModelConfig, ModelError, NormMode};
use crate::hetgraph::HetGraph;
use crate::tensor::{ParamStore, Tape, Tensor, Var};

/// Adjacency matrix per relation. With a single relation every edge type is
/// merged into it. Under [`NormMode::Degree`] row `n` of relation `r` is
/// divided by `|N^r(n)|`.
pub fn relation_matrices(g: &HetGraph, relations: usize, norm: NormMode) -> Vec<Tensor> {
    let n = g.num_nodes();
    let mut mats = vec![Tensor::zeros(&[n, n]); relations];
    for e in &g.edges {
        let r = if relations == 1 { 0 } else { e.ty };
        let d = mats[r].data_mut();
        d[e.src * n + e.dst] = 1.0;
        d[e.dst * n + e.src] = 1.0;
    }
    if norm == NormMode::Degree {
        for m in &mut mats {
            for row in m.data_mut().chunks_mut(n) {
                let k: f64 = row.iter().sum();
                if k > 0.0 {
                    row.iter_mut().for_each(|x| *x /= k);
                }
            }
        }
    }
    mats
}

fn one_plus_eps<'a>(t: &mut Tape<'a>, p: &'a ParamStore, prefix: &str) -> Result<Var, ModelError> {
    let eps = t.param(p, &format!("{prefix}.eps"))?;
    let one = t.scalar(1.0);
    Ok(t.add(eps, one)?)
}

/// `MLP((1 + ε) z_n + Γ_n)` with `Γ_n = Σ_r Σ_{m ∈ N^r(n)} z_m W_r / k_{n,r}`.
///
/// `rels[r]` is the scaled adjacency of relation `r`; each `W_r` is
/// rebuilt as `Σ_b coef[r, b] · basis[b]`, so all relations of the layer
/// are applied as one `[n, R·d] × [R·d, d]` product.
pub fn hgin_layer<'a>(t: &mut Tape<'a>, p: &'a ParamStore, prefix: &str, z: Var, rels: &[Var]) -> Result<Var, ModelError> {
    let din = t.shape(z)[1];
    let basis = t.param(p, &format!("{prefix}.basis"))?;
    let coef = t.param(p, &format!("{prefix}.coef"))?;
    let r = t.shape(coef)[0];
    if rels.len() != r {
        return Err(ModelError::InvalidConfig(format!(
            "layer {prefix} has {r} relations, graph supplies {}",
            rels.len()
        )));
    }
    let w = t.matmul(coef, basis)?;
    let w = t.reshape(w, &[r * din, din])?;
    let msgs = rels.iter().map(|&a| t.matmul(a, z)).collect::<Result<Vec<_>, _>>()?;
    let m = if r == 1 { msgs[0] } else { t.concat(&msgs)? };
    let gamma = t.matmul(m, w)?;
    let s = one_plus_eps(t, p, prefix)?;
    let zs = t.mul(z, s)?;
    let h = t.add(zs, gamma)?;
    mlp2(t, p, &format!("{prefix}.mlp"), h)
}

/// Plain GIN update `MLP((1 + ε) z_n + Σ_{m ∈ N(n)} z_m)` over `adj`.
pub fn gin_layer<'a>(t: &mut Tape<'a>, p: &'a ParamStore, prefix: &str, z: Var, adj: Var) -> Result<Var, ModelError> {
    let agg = t.matmul(adj, z)?;
    let s = one_plus_eps(t, p, prefix)?;
    let zs = t.mul(z, s)?;
    let h = t.add(zs, agg)?;
    mlp2(t, p, &format!("{prefix}.mlp"), h)
}

/// Stacked encoder layers over one-hot features; returns `[n, hidden_dim]`.
pub fn encode<'a>(t: &mut Tape<'a>, p: &'a ParamStore, cfg: &ModelConfig, g: &GraphInput) -> Result<Var, ModelError> {
    let mut z = t.constant(&g.features);
    let rels: Vec<Var> = g.relations.iter().map(|a| t.constant(a)).collect();
    for l in 0..cfg.layers {
        z = hgin_layer(t, p, &format!("enc.{l}"), z, &rels)?;
    }
    Ok(z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hetgraph::Edge;

    #[test]
    fn degree_rows_sum_to_one() {
        let g = HetGraph::new("g", vec![0, 0, 0], vec![Edge::new(0, 1, 0), Edge::new(0, 2, 0), Edge::new(1, 2, 1)]);
        let m = relation_matrices(&g, 2, NormMode::Degree);
        assert_eq!(m[0].data(), &[0.0, 0.5, 0.5, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_eq!(m[1].data(), &[0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let merged = relation_matrices(&g, 1, NormMode::None);
        assert_eq!(merged[0].data(), &[0.0, 1.0, 1.0, 1.0, 0.0, 1.0, 1.0, 1.0, 0.0]);
    }

    #[test]
    fn merged_multi_type_edge_counts_once() {
        let g = HetGraph::new("g", vec![0, 1], vec![Edge::new(0, 1, 0), Edge::new(0, 1, 1)]);
        let m = relation_matrices(&g, 1, NormMode::None);
        assert_eq!(m[0].data(), &[0.0, 1.0, 1.0, 0.0]);
    }
}
