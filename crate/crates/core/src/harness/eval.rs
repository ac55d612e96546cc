use std::collections::{BTreeMap, HashMap};
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::metrics::{kendall, mse, precision_at_k, rank_desc, spearman, MetricsRecord};
use super::HarnessError;
use crate::dataset::{synth_source_graph, BfsSampler, GraphPair, SamplerSpec};
use crate::hged::{hged_astar, normalize_hged};
use crate::hetgraph::HetGraph;
use crate::model::{init_params, GraphInput, HeGMN, ModelConfig, ModelError, Variant};
use crate::tensor::{finite_diff_check, GradCheckReport, ParamStore, TensorError};

/// Predictions for `pairs` in order, scored in parallel.
pub fn predict_pairs(
    model: &HeGMN,
    params: &ParamStore,
    pairs: &[GraphPair],
    inputs: &HashMap<String, GraphInput>,
    variant: Variant,
) -> Result<Vec<f64>, HarnessError> {
    let get = |id: &str| inputs.get(id).ok_or_else(|| HarnessError::UnknownGraph(id.to_string()));
    pairs
        .par_iter()
        .map(|p| Ok(model.score(params, get(&p.id_a)?, get(&p.id_b)?, variant)?))
        .collect()
}

fn average(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

/// Metrics of `preds` against the pair labels.
///
/// MSE is over all pairs. Rank metrics are computed per query graph
/// (`id_a`) over its candidates and averaged across queries; a query where a
/// metric is undefined (constant ranking, or fewer than `k` candidates) is
/// left out of that metric's average. A metric with no defined query is NaN.
pub fn metrics_from_predictions(pairs: &[GraphPair], preds: &[f64], seconds: f64) -> MetricsRecord {
    let truth: Vec<f64> = pairs.iter().map(|p| p.norm_score).collect();
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        groups.entry(p.id_a.as_str()).or_default().push(i);
    }
    let (mut rho, mut tau, mut p10, mut p20) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for idx in groups.values() {
        let pr: Vec<f64> = idx.iter().map(|&i| preds[i]).collect();
        let tr: Vec<f64> = idx.iter().map(|&i| truth[i]).collect();
        let ids: Vec<&str> = idx.iter().map(|&i| pairs[i].id_b.as_str()).collect();
        rho.extend(spearman(&pr, &tr).ok());
        tau.extend(kendall(&pr, &tr).ok());
        p10.extend(precision_at_k(&pr, &tr, &ids, 10).ok());
        p20.extend(precision_at_k(&pr, &tr, &ids, 20).ok());
    }
    MetricsRecord {
        mse: mse(preds, &truth),
        spearman_rho: average(&rho),
        kendall_tau: average(&tau),
        p_at_10: average(&p10),
        p_at_20: average(&p20),
        num_pairs: pairs.len(),
        seconds,
    }
}

/// Scores every pair with the full model and computes its metrics.
pub fn evaluate(
    model: &HeGMN,
    params: &ParamStore,
    pairs: &[GraphPair],
    inputs: &HashMap<String, GraphInput>,
    timing: bool,
) -> Result<MetricsRecord, HarnessError> {
    let start = Instant::now();
    let preds = predict_pairs(model, params, pairs, inputs, Variant::Full)?;
    let secs = if timing { start.elapsed().as_secs_f64() } else { 0.0 };
    Ok(metrics_from_predictions(pairs, &preds, secs))
}

/// Top-`k` corpus graphs by predicted similarity to `g`, ties by id.
pub fn query(
    model: &HeGMN,
    params: &ParamStore,
    g: &HetGraph,
    corpus: &[(String, GraphInput)],
    k: usize,
) -> Result<Vec<(String, f64)>, HarnessError> {
    let q = model.prepare(g)?;
    let scores: Vec<f64> = corpus
        .par_iter()
        .map(|(_, c)| model.score(params, &q, c, Variant::Full))
        .collect::<Result<_, _>>()?;
    let ids: Vec<&str> = corpus.iter().map(|(id, _)| id.as_str()).collect();
    Ok(rank_desc(&scores, &ids).into_iter().take(k).map(|i| (corpus[i].0.clone(), scores[i])).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub pairs: usize,
    pub repeat: usize,
    /// Median seconds to score all pairs once.
    pub full: f64,
    pub graph_match_only: f64,
}

fn median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        (xs[n / 2 - 1] + xs[n / 2]) / 2.0
    }
}

/// Median single-worker wall time over `repeat` runs of scoring `pairs`,
/// for the full model and for graph-level matching alone.
pub fn bench_time(
    model: &HeGMN,
    params: &ParamStore,
    pairs: &[(&GraphInput, &GraphInput)],
    repeat: usize,
) -> Result<BenchReport, HarnessError> {
    let repeat = repeat.max(1);
    let run = |variant| -> Result<f64, HarnessError> {
        let mut times = Vec::with_capacity(repeat);
        for _ in 0..repeat {
            let start = Instant::now();
            for &(a, b) in pairs {
                std::hint::black_box(model.score(params, a, b, variant)?);
            }
            times.push(start.elapsed().as_secs_f64());
        }
        Ok(median(times))
    };
    let full = run(Variant::Full)?;
    let graph_match_only = run(Variant::GraphMatchOnly)?;
    Ok(BenchReport { pairs: pairs.len(), repeat, full, graph_match_only })
}

/// Copy of `params` with uniform noise from `[-scale, scale]` added to every
/// entry, biases and `ε` included.
pub fn jitter_params(params: &ParamStore, scale: f64, seed: u64) -> ParamStore {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = params.clone();
    for (_, t) in out.iter_mut() {
        for x in t.data_mut() {
            *x += rng.gen_range(-scale..scale);
        }
    }
    out
}

fn to_tensor_error(e: ModelError) -> TensorError {
    match e {
        ModelError::Tensor(t) => t,
        other => TensorError::Invalid(other.to_string()),
    }
}

/// Finite-difference check of the full pair loss.
pub fn model_gradcheck(
    model: &HeGMN,
    params: &ParamStore,
    gi: &GraphInput,
    gj: &GraphInput,
    target: f64,
    eps: f64,
    per_param: Option<usize>,
) -> Result<GradCheckReport, HarnessError> {
    Ok(finite_diff_check(params, eps, per_param, |t, p| {
        model.pair_loss(t, p, gi, gj, target).map_err(to_tensor_error)
    })?)
}

/// [`model_gradcheck`] on `pairs` BFS-sampled pairs of at most `max_nodes`
/// nodes, each with freshly jittered parameters and its exact normalized
/// HGED as target.
pub fn gradcheck_suite(
    cfg: &ModelConfig,
    pairs: usize,
    max_nodes: usize,
    seed: u64,
    eps: f64,
    per_param: Option<usize>,
) -> Result<Vec<GradCheckReport>, HarnessError> {
    let model = HeGMN::new(cfg.clone())?;
    let source = synth_source_graph(cfg.node_types, cfg.edge_types, 500, 2.0, seed)?;
    let sampler = BfsSampler::new(&source);
    let spec = SamplerSpec { max_nodes, min_node_types: 1, seed };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = init_params(cfg, seed)?;
    (0..pairs)
        .map(|i| {
            let a = sampler.sample(&spec, "a", &mut rng)?;
            let b = sampler.sample(&spec, "b", &mut rng)?;
            let d = hged_astar(&a, &b, None)?;
            let target = normalize_hged(d as f64, a.num_nodes(), b.num_nodes());
            let params = jitter_params(&base, 0.1, seed.wrapping_add(i as u64));
            let (gi, gj) = (model.prepare(&a)?, model.prepare(&b)?);
            model_gradcheck(&model, &params, &gi, &gj, target, eps, per_param)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(a: &str, b: &str, s: f64) -> GraphPair {
        GraphPair { id_a: a.into(), id_b: b.into(), hged: 0, norm_score: s }
    }

    #[test]
    fn oracle_predictor_is_perfect() {
        let pairs: Vec<GraphPair> = (0..25)
            .flat_map(|c| ["q0", "q1"].map(|q| pair(q, &format!("c{c:02}"), (c as f64 * 0.37 + q.len() as f64).sin())))
            .collect();
        let preds: Vec<f64> = pairs.iter().map(|p| p.norm_score).collect();
        let m = metrics_from_predictions(&pairs, &preds, 0.0);
        assert_eq!((m.mse, m.spearman_rho, m.kendall_tau, m.p_at_10, m.p_at_20), (0.0, 1.0, 1.0, 1.0, 1.0));
        assert_eq!(m.num_pairs, 50);
    }

    #[test]
    fn constant_predictor_mse_is_variance() {
        let scores = [0.1, 0.4, 0.6, 0.9, 0.5];
        let pairs: Vec<GraphPair> = scores.iter().enumerate().map(|(i, &s)| pair("q", &format!("c{i}"), s)).collect();
        let mean = scores.iter().sum::<f64>() / 5.0;
        let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / 5.0;
        let m = metrics_from_predictions(&pairs, &[mean; 5], 0.0);
        assert!((m.mse - var).abs() < 1e-15);
        assert!(m.spearman_rho.is_nan());
        assert!(m.p_at_10.is_nan());
    }

    #[test]
    fn median_of_repeats() {
        assert_eq!(median(vec![3.0]), 3.0);
        assert_eq!(median(vec![3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(vec![4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
