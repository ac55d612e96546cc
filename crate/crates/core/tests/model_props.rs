mod common;

use common::{random_graph, random_perm};
use hegmn::harness::jitter_params;
use hegmn::hetgraph::{typed_wl_hash, Edge, HetGraph};
use hegmn::model::*;
use hegmn::tensor::{ParamStore, Tape, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Row-major `[n, k] x [k, m]`.
fn mm(a: &[f64], b: &[f64], n: usize, k: usize, m: usize) -> Vec<f64> {
    let mut out = vec![0.0; n * m];
    for i in 0..n {
        for j in 0..m {
            out[i * m + j] = (0..k).map(|l| a[i * k + l] * b[l * m + j]).sum();
        }
    }
    out
}

fn affine_ref(p: &ParamStore, prefix: &str, x: &[f64], n: usize) -> Vec<f64> {
    let w = p.get(&format!("{prefix}.w")).unwrap();
    let b = p.get(&format!("{prefix}.b")).unwrap();
    let (k, m) = (w.shape()[0], w.shape()[1]);
    let mut y = mm(x, w.data(), n, k, m);
    for (i, v) in y.iter_mut().enumerate() {
        *v += b.data()[i % m];
    }
    y
}

fn mlp_ref(p: &ParamStore, prefix: &str, x: &[f64], n: usize) -> Vec<f64> {
    let h: Vec<f64> = affine_ref(p, &format!("{prefix}0"), x, n).into_iter().map(|v| v.max(0.0)).collect();
    affine_ref(p, &format!("{prefix}1"), &h, n)
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + x.abs().max(y.abs())))
}

fn small_cfg(node_types: usize, edge_types: usize, max_nodes: usize) -> ModelConfig {
    let mut c = ModelConfig::new(node_types, edge_types);
    c.max_nodes = max_nodes;
    c.hidden_dim = 16;
    c
}

fn random_params(cfg: &ModelConfig, seed: u64) -> ParamStore {
    jitter_params(&init_params(cfg, seed).unwrap(), 0.5, seed)
}

fn random_z(rng: &mut impl Rng, n: usize, d: usize) -> Tensor {
    Tensor::new(vec![n, d], (0..n * d).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

#[test]
fn hgin_degrades_to_gin() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for seed in 0..20 {
        let mut cfg = small_cfg(3, 1, 10);
        cfg.basis_count = 1;
        cfg.normalization = NormMode::None;
        let mut p = random_params(&cfg, seed);
        let d = cfg.hidden_dim;
        *p.get_mut("enc.1.coef").unwrap() = Tensor::new(vec![1, 1], vec![1.0]).unwrap();
        *p.get_mut("enc.1.basis").unwrap() = Tensor::new(vec![1, d * d], Tensor::identity(d).into_data()).unwrap();
        let g = random_graph(&mut rng, "g", 10, 3, 1, 0.4);
        let z = random_z(&mut rng, g.num_nodes(), d);
        let adj = &relation_matrices(&g, 1, NormMode::None)[0];

        let mut t = Tape::new();
        let zv = t.constant(&z);
        let a = t.constant(adj);
        let h = hgin_layer(&mut t, &p, "enc.1", zv, &[a]).unwrap();
        let gin = gin_layer(&mut t, &p, "enc.1", zv, a).unwrap();
        let (h, gin) = (t.value(h), t.value(gin));
        assert!(h.iter().zip(gin).all(|(x, y)| (x - y).abs() <= 1e-12), "seed {seed}");
    }
}

#[test]
fn hgin_matches_recomputed_relations() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for (seed, norm) in [(0, NormMode::Degree), (1, NormMode::None), (2, NormMode::Degree)] {
        let mut cfg = small_cfg(3, 3, 10);
        cfg.normalization = norm;
        let p = random_params(&cfg, seed);
        let g = random_graph(&mut rng, "g", 10, 3, 3, 0.5);
        let n = g.num_nodes();
        let d = cfg.hidden_dim;
        let z = random_z(&mut rng, n, d);
        let rels = relation_matrices(&g, 3, norm);

        let mut t = Tape::new();
        let zv = t.constant(&z);
        let rv: Vec<Var> = rels.iter().map(|a| t.constant(a)).collect();
        let out = hgin_layer(&mut t, &p, "enc.1", zv, &rv).unwrap();

        let eps = p.get("enc.1.eps").unwrap().data()[0];
        let basis = p.get("enc.1.basis").unwrap().data();
        let coef = p.get("enc.1.coef").unwrap();
        let mut pre: Vec<f64> = z.data().iter().map(|v| (1.0 + eps) * v).collect();
        for (r, a) in rels.iter().enumerate() {
            let mut w = vec![0.0; d * d];
            for b in 0..cfg.basis_count {
                for (k, x) in w.iter_mut().enumerate() {
                    *x += coef.at(r, b) * basis[b * d * d + k];
                }
            }
            let msg = mm(&mm(a.data(), z.data(), n, n, d), &w, n, d, d);
            pre.iter_mut().zip(msg).for_each(|(x, m)| *x += m);
        }
        let expected = mlp_ref(&p, "enc.1.mlp", &pre, n);
        assert!(close(t.value(out), &expected, 1e-12));
    }
}

#[test]
fn isolated_node_sees_only_itself() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = small_cfg(2, 2, 4);
    let p = random_params(&cfg, 9);
    let g = HetGraph::new("g", vec![1], vec![]);
    let z = random_z(&mut rng, 1, cfg.hidden_dim);
    let mut t = Tape::new();
    let zv = t.constant(&z);
    let rv: Vec<Var> = relation_matrices(&g, 2, NormMode::Degree).iter().map(|a| t.constant(a)).collect();
    let out = hgin_layer(&mut t, &p, "enc.2", zv, &rv).unwrap();
    let eps = p.get("enc.2.eps").unwrap().data()[0];
    let pre: Vec<f64> = z.data().iter().map(|v| (1.0 + eps) * v).collect();
    assert!(close(t.value(out), &mlp_ref(&p, "enc.2.mlp", &pre, 1), 1e-14));
}

fn scalar_param(p: &mut ParamStore, name: &str, shape: &[usize], v: f64) {
    p.insert(name, Tensor::filled(shape, v));
}

#[test]
fn hgin_two_node_hand_computation() {
    let mut p = ParamStore::new();
    scalar_param(&mut p, "l.eps", &[1], 0.5);
    scalar_param(&mut p, "l.basis", &[1, 1], 2.0);
    scalar_param(&mut p, "l.coef", &[1, 1], 1.5);
    scalar_param(&mut p, "l.mlp0.w", &[1, 1], 0.5);
    scalar_param(&mut p, "l.mlp0.b", &[1, 1], -1.0);
    scalar_param(&mut p, "l.mlp1.w", &[1, 1], 2.0);
    scalar_param(&mut p, "l.mlp1.b", &[1, 1], 1.0);
    let g = HetGraph::new("g", vec![0, 0], vec![Edge::new(0, 1, 0)]);
    let mut t = Tape::new();
    let z = t.constant(&Tensor::new(vec![2, 1], vec![2.0, 3.0]).unwrap());
    let a = t.constant(&relation_matrices(&g, 1, NormMode::Degree)[0]);
    let out = hgin_layer(&mut t, &p, "l", z, &[a]).unwrap();
    // W = 1.5 * 2 = 3; pre = 1.5 z + 3 z_other = [12, 10.5]; mlp: 2 relu(0.5 x - 1) + 1
    assert_eq!(t.value(out), &[11.0, 9.5]);
}

#[test]
fn encode_zero_params_give_zero() {
    let cfg = small_cfg(3, 3, 10);
    let mut p = init_params(&cfg, 0).unwrap();
    for (_, t) in p.iter_mut() {
        t.data_mut().iter_mut().for_each(|x| *x = 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let g = random_graph(&mut rng, "g", 10, 3, 3, 0.4);
    let gi = GraphInput::new(&g, &cfg).unwrap();
    let mut t = Tape::new();
    let z = encode(&mut t, &p, &cfg, &gi).unwrap();
    assert!(t.value(z).iter().all(|&x| x == 0.0));
}

#[test]
fn encode_is_equivariant_and_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = small_cfg(3, 3, 10);
    for seed in 0..20 {
        let p = random_params(&cfg, seed);
        let g = random_graph(&mut rng, "g", 10, 3, 3, 0.4);
        let perm = random_perm(&mut rng, g.num_nodes());
        let run = |h: &HetGraph| {
            let gi = GraphInput::new(h, &cfg).unwrap();
            let mut t = Tape::new();
            let z = encode(&mut t, &p, &cfg, &gi).unwrap();
            t.value(z).to_vec()
        };
        let (z, zp) = (run(&g), run(&g.permuted(&perm)));
        assert_eq!(run(&g), z);
        let d = cfg.hidden_dim;
        for v in 0..g.num_nodes() {
            assert!(close(&z[v * d..(v + 1) * d], &zp[perm[v] * d..(perm[v] + 1) * d], 1e-12));
        }
    }
}

#[test]
fn type_pool_sums_per_type() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let cfg = small_cfg(4, 2, 10);
    for _ in 0..20 {
        let g = random_graph(&mut rng, "g", 10, 3, 2, 0.3);
        let gi = GraphInput::new(&g, &cfg).unwrap();
        let z = random_z(&mut rng, g.num_nodes(), 5);
        let mut t = Tape::new();
        let zv = t.constant(&z);
        let pool = type_pool(&mut t, zv, &gi).unwrap();
        let got = t.value(pool);
        for c in 0..4 {
            for k in 0..5 {
                let direct: f64 = (0..g.num_nodes()).filter(|&v| gi.types[v] == c).map(|v| z.at(v, k)).sum();
                assert!((got[c * 5 + k] - direct).abs() < 1e-12);
                if c == 3 {
                    assert_eq!(got[c * 5 + k], 0.0);
                }
            }
        }
    }
}

#[test]
fn graph_match_single_type_hand_computation() {
    let mut p = ParamStore::new();
    scalar_param(&mut p, "gm.pair0.w", &[2, 1], 1.0);
    scalar_param(&mut p, "gm.pair0.b", &[1, 1], 0.0);
    scalar_param(&mut p, "gm.pair1.w", &[1, 1], 1.0);
    scalar_param(&mut p, "gm.pair1.b", &[1, 1], 0.0);
    scalar_param(&mut p, "gm.attn", &[1, 1], 0.5);
    scalar_param(&mut p, "gm.out0.w", &[1, 1], 1.0);
    scalar_param(&mut p, "gm.out0.b", &[1, 1], 0.0);
    scalar_param(&mut p, "gm.out1.w", &[1, 1], 1.0);
    scalar_param(&mut p, "gm.out1.b", &[1, 1], 0.0);
    let mut t = Tape::new();
    let ti = t.constant(&Tensor::new(vec![1, 1], vec![1.0]).unwrap());
    let tj = t.constant(&Tensor::new(vec![1, 1], vec![2.0]).unwrap());
    let h = graph_match(&mut t, &p, ti, tj).unwrap();
    // t_c = 1 + 2 = 3, a = tanh(0.5 * 3), h = σ(3a) * 3
    let a = (1.5f64).tanh();
    let expected = 3.0 / (1.0 + (-3.0 * a).exp());
    assert!((t.value(h)[0] - expected).abs() < 1e-15);
}

#[test]
fn graph_match_single_type_weights_by_sigmoid() {
    let cfg = small_cfg(1, 1, 10);
    let d = cfg.hidden_dim;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for seed in 0..10 {
        let mut p = random_params(&cfg, seed);
        // identity output MLP on positive inputs exposes h itself
        for l in ["gm.out0", "gm.out1"] {
            p.insert(format!("{l}.w"), Tensor::identity(d));
            p.insert(format!("{l}.b"), Tensor::zeros(&[1, d]));
        }
        let ti = random_z(&mut rng, 1, d);
        let tj = random_z(&mut rng, 1, d);
        let mut t = Tape::new();
        let (a, b) = (t.constant(&ti), t.constant(&tj));
        let h = graph_match(&mut t, &p, a, b).unwrap();
        let x: Vec<f64> = ti.data().iter().chain(tj.data()).copied().collect();
        let tc = mlp_ref(&p, "gm.pair", &x, 1);
        let ctx: Vec<f64> = mm(&tc, p.get("gm.attn").unwrap().data(), 1, d, d).into_iter().map(f64::tanh).collect();
        let s: f64 = tc.iter().zip(&ctx).map(|(u, v)| u * v).sum();
        let w = 1.0 / (1.0 + (-s).exp());
        let expected: Vec<f64> = tc.iter().map(|v| (w * v).max(0.0)).collect();
        assert!(close(t.value(h), &expected, 1e-12));
    }
}

#[test]
fn default_matching_vectors_have_length_128() {
    let cfg = ModelConfig::new(3, 3);
    let p = init_params(&cfg, 0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let gi = GraphInput::canonical(&random_graph(&mut rng, "a", 8, 3, 3, 0.4), &cfg).unwrap();
    let gj = GraphInput::canonical(&random_graph(&mut rng, "b", 8, 3, 3, 0.4), &cfg).unwrap();
    let mut t = Tape::new();
    let zi = encode(&mut t, &p, &cfg, &gi).unwrap();
    let zj = encode(&mut t, &p, &cfg, &gj).unwrap();
    let ti = type_pool(&mut t, zi, &gi).unwrap();
    let tj = type_pool(&mut t, zj, &gj).unwrap();
    let h = graph_match(&mut t, &p, ti, tj).unwrap();
    let s = node_match(&mut t, &p, &cfg, zi, zj, &gi, &gj).unwrap().s_prime;
    assert_eq!(t.shape(h), &[1, 128]);
    assert_eq!(t.shape(s), &[1, 128]);
}

fn trace_pair(cfg: &ModelConfig, p: &ParamStore, gi: &GraphInput, gj: &GraphInput) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut t = Tape::new();
    let zi = encode(&mut t, p, cfg, gi).unwrap();
    let zj = encode(&mut t, p, cfg, gj).unwrap();
    let tr = node_match(&mut t, p, cfg, zi, zj, gi, gj).unwrap();
    let cross = tr.cross.iter().map(|&v| t.value(v).to_vec()).collect();
    let aligned = tr.aligned.iter().map(|&v| t.value(v).to_vec()).collect();
    (cross, aligned, tr.masks)
}

#[test]
fn masked_entries_are_exactly_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for mode in [MaskMode::Multiplicative, MaskMode::Additive] {
        let mut cfg = small_cfg(3, 3, 10);
        cfg.mask_mode = mode;
        for seed in 0..30 {
            let p = random_params(&cfg, seed);
            let gi = GraphInput::canonical(&random_graph(&mut rng, "a", 10, 3, 3, 0.3), &cfg).unwrap();
            let gj = GraphInput::canonical(&random_graph(&mut rng, "b", 10, 3, 3, 0.3), &cfg).unwrap();
            let (cross, aligned, masks) = trace_pair(&cfg, &p, &gi, &gj);
            assert_eq!(cross.len(), 2 * cfg.heads);
            for c in 0..cross.len() {
                let (na, nb) = if c < cfg.heads { (gi.num_nodes(), gj.num_nodes()) } else { (gj.num_nodes(), gi.num_nodes()) };
                let n = cfg.pad_size();
                for e in 0..n * n {
                    let (r, col) = (e / n, e % n);
                    let (ta, tb) = if c < cfg.heads { (&gi.types, &gj.types) } else { (&gj.types, &gi.types) };
                    let same = r < na && col < nb && ta[r] == tb[col];
                    assert_eq!(masks[c][e] == 1.0, same);
                    if !same {
                        assert_eq!(cross[c][e], 0.0, "cross channel {c} entry {e}");
                        assert_eq!(aligned[c][e], 0.0, "aligned channel {c} entry {e}");
                    }
                }
            }
        }
    }
}

#[test]
fn single_node_pair_softmax_is_one() {
    let cfg = small_cfg(2, 1, 4);
    let p = random_params(&cfg, 3);
    let g = HetGraph::new("a", vec![1], vec![]);
    let gi = GraphInput::canonical(&g, &cfg).unwrap();
    let (cross, _, _) = trace_pair(&cfg, &p, &gi, &gi);
    for c in &cross {
        assert_eq!(c[0], 1.0);
        assert!(c[1..].iter().all(|&x| x == 0.0));
    }
}

#[test]
fn swapping_graphs_swaps_direction_channels() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let cfg = small_cfg(3, 3, 10);
    for seed in 0..10 {
        let p = random_params(&cfg, seed);
        let gi = GraphInput::canonical(&random_graph(&mut rng, "a", 10, 3, 3, 0.3), &cfg).unwrap();
        let gj = GraphInput::canonical(&random_graph(&mut rng, "b", 10, 3, 3, 0.3), &cfg).unwrap();
        let (ab, _, _) = trace_pair(&cfg, &p, &gi, &gj);
        let (ba, _, _) = trace_pair(&cfg, &p, &gj, &gi);
        let h = cfg.heads;
        for k in 0..h {
            assert_eq!(ab[k], ba[h + k]);
            assert_eq!(ab[h + k], ba[k]);
        }
    }
}

#[test]
fn predict_is_a_probability() {
    let cfg = small_cfg(3, 3, 10);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = init_params(&cfg, 0).unwrap();
    let width = cfg.graph_match_dim;
    for _ in 0..1000 {
        let h = random_z(&mut rng, 1, width);
        let s = Tensor::new(vec![1, width], (0..width).map(|_| rng.gen_range(-3.0..3.0)).collect()).unwrap();
        let mut t = Tape::new();
        let (hv, sv) = (t.constant(&h), t.constant(&s));
        let y = predict(&mut t, &p, hv, sv).unwrap();
        let v = t.value(y)[0];
        assert!(v > 0.0 && v < 1.0, "{v}");
        let mut t2 = Tape::new();
        let (hv, sv) = (t2.constant(&h), t2.constant(&s));
        let y2 = predict(&mut t2, &p, hv, sv).unwrap();
        assert_eq!(t2.value(y2)[0], v);
    }
    let mut zero = p.clone();
    for (_, t) in zero.iter_mut() {
        t.data_mut().iter_mut().for_each(|x| *x = 0.0);
    }
    let mut t = Tape::new();
    let (hv, sv) = (t.constant(&Tensor::filled(&[1, width], 3.0)), t.constant(&Tensor::filled(&[1, width], -2.0)));
    let y = predict(&mut t, &zero, hv, sv).unwrap();
    assert_eq!(t.value(y), &[0.5]);
}

#[test]
fn prediction_ignores_node_labels() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let cfg = small_cfg(3, 3, 10);
    let model = HeGMN::new(cfg.clone()).unwrap();
    for seed in 0..25 {
        let p = random_params(&cfg, seed);
        let a = random_graph(&mut rng, "a", 10, 3, 3, 0.3);
        let b = random_graph(&mut rng, "b", 10, 3, 3, 0.3);
        let pa = a.permuted(&random_perm(&mut rng, a.num_nodes()));
        let pb = b.permuted(&random_perm(&mut rng, b.num_nodes()));
        let s = model.score(&p, &model.prepare(&a).unwrap(), &model.prepare(&b).unwrap(), Variant::Full).unwrap();
        let sp = model.score(&p, &model.prepare(&pa).unwrap(), &model.prepare(&pb).unwrap(), Variant::Full).unwrap();
        assert!((s - sp).abs() < 1e-9, "seed {seed}: {s} vs {sp}");
    }
}

/// Total-sum readout of random-initialized encoder and type pooling.
fn readout(cfg: &ModelConfig, p: &ParamStore, g: &HetGraph) -> Vec<f64> {
    let gi = GraphInput::new(g, cfg).unwrap();
    let mut t = Tape::new();
    let z = encode(&mut t, p, cfg, &gi).unwrap();
    let pool = type_pool(&mut t, z, &gi).unwrap();
    let total = t.sum(pool, hegmn::tensor::Axis::Rows).unwrap();
    t.value(total).to_vec()
}

#[test]
fn encoder_separates_wl_distinct_graphs() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let cfg = ModelConfig::new(3, 3);
    let p = init_params(&cfg, 13).unwrap();
    let (mut tried, mut separated) = (0, 0);
    while tried < 100 {
        let a = random_graph(&mut rng, "a", 8, 3, 3, 0.35);
        let b = random_graph(&mut rng, "b", 8, 3, 3, 0.35);
        if typed_wl_hash(&a, 8) == typed_wl_hash(&b, 8) {
            continue;
        }
        tried += 1;
        let (ra, rb) = (readout(&cfg, &p, &a), readout(&cfg, &p, &b));
        let gap = ra.iter().zip(&rb).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        if gap > 1e-6 {
            separated += 1;
        }
    }
    assert!(separated >= 99, "{separated}/100");
}
