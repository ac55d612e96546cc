use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use hegmn::dataset::{
    build_bundle, build_corpus, read_dataset, synth_source_graph, write_dataset, DatasetBundle,
    DatasetError, PairCap, SamplerSpec,
};
use hegmn::harness::{
    bench_time, evaluate, gradcheck_suite, load_model, prepare_corpus, query as rank_corpus, train as run_training,
    write_log_csv, write_metrics_csv, HarnessError, MetricsRecord, TrainConfig, TrainOptions, METRICS_HEADER,
};
use hegmn::hetgraph::{parse_graph, read_corpus, write_corpus, GraphError, HetGraph, TypeVocab};
use hegmn::hged::{
    edit_path_from_mapping, hged_astar_mapping, hged_brute_mapping, normalize_hged, EditOp, HgedError,
};
use hegmn::model::{GraphInput, ModelConfig, ModelError};
use hegmn::tensor::{read_checkpoint, write_checkpoint, Checkpoint, TensorError};

use crate::{
    BenchArgs, DatasetArgs, EvalArgs, GedArgs, GradcheckArgs, Method, Preset, QueryArgs, SampleArgs, SplitName,
    SynthArgs, TrainArgs,
};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or configuration.
    Usage(String),
    /// Missing, malformed or out-of-range input data.
    Data(String),
    /// Divergence, failed gradient check or exhausted search.
    Numeric(String),
}

impl CliError {
    pub fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Numeric(m) => f.write_str(m),
        }
    }
}

impl From<GraphError> for CliError {
    fn from(e: GraphError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InvalidSpec(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<HgedError> for CliError {
    fn from(e: HgedError) -> Self {
        match e {
            HgedError::ExpansionLimit { .. } => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<TensorError> for CliError {
    fn from(e: TensorError) -> Self {
        match e {
            TensorError::Checkpoint(_) => CliError::Data(e.to_string()),
            _ => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Tensor(t) => t.into(),
            ModelError::InvalidConfig(_) => CliError::Usage(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Config(_) => CliError::Usage(e.to_string()),
            HarnessError::Diverged { .. } | HarnessError::Undefined(_) => CliError::Numeric(e.to_string()),
            HarnessError::Model(m) => m.into(),
            HarnessError::Tensor(t) => t.into(),
            HarnessError::Dataset(d) => d.into(),
            HarnessError::Hged(h) => h.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| CliError::Data(format!("{}: {e}", path.display()))
}

fn require_out(out: Option<PathBuf>, what: &str) -> Result<PathBuf, CliError> {
    out.ok_or_else(|| CliError::Usage(format!("--out is required ({what})")))
}

fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(io_err(path))
}

fn read_vocab(path: &Path) -> Result<TypeVocab, CliError> {
    Ok(TypeVocab::from_json(&read_text(path)?)?)
}

fn read_graph(path: &Path, vocab: &TypeVocab) -> Result<HetGraph, CliError> {
    Ok(parse_graph(read_text(path)?.trim(), vocab)?)
}

/// Writes `text` to `out`, or to stdout when no path is given.
fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => fs::write(p, text).map_err(io_err(p)),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::Data(e.to_string())),
    }
}

pub fn synth(a: &SynthArgs, seed: u64, out: Option<PathBuf>) -> Result<(), CliError> {
    let dir = require_out(out, "output directory")?;
    let g = synth_source_graph(a.node_types, a.edge_types, a.nodes, a.mean_degree, seed)?;
    let vocab = TypeVocab::numbered(a.node_types, a.edge_types);
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_corpus(&dir.join("source.jsonl"), std::slice::from_ref(&g), &vocab)?;
    let vpath = dir.join("vocab.json");
    fs::write(&vpath, vocab.to_json()).map_err(io_err(&vpath))?;
    eprintln!("source graph: {} nodes, {} edges", g.num_nodes(), g.num_edges());
    Ok(())
}

pub fn sample(a: &SampleArgs, seed: u64, out: Option<PathBuf>) -> Result<(), CliError> {
    let path = require_out(out, "corpus file")?;
    let vocab = read_vocab(&a.vocab)?;
    let source = read_corpus(&a.source, &vocab)?
        .into_iter()
        .next()
        .ok_or_else(|| CliError::Data(format!("{}: no graph", a.source.display())))?;
    let spec = SamplerSpec { max_nodes: a.max_nodes, min_node_types: a.min_node_types, seed };
    let corpus = build_corpus(&source, a.count, &spec)?;
    write_corpus(&path, &corpus, &vocab)?;
    eprintln!("wrote {} graphs to {}", corpus.len(), path.display());
    Ok(())
}

fn op_text(op: &EditOp, vocab: &TypeVocab) -> String {
    match *op {
        EditOp::InsertNode { ty, slot: Some(s) } => format!("insert-node {} at {s}", vocab.node_types[ty]),
        EditOp::InsertNode { ty, slot: None } => format!("insert-node {}", vocab.node_types[ty]),
        EditOp::DeleteNode { node } => format!("delete-node {node}"),
        EditOp::InsertEdge { src, dst, ty } => format!("insert-edge {src} {dst} {}", vocab.edge_types[ty]),
        EditOp::DeleteEdge { src, dst, ty } => format!("delete-edge {src} {dst} {}", vocab.edge_types[ty]),
    }
}

pub fn ged(a: &GedArgs) -> Result<(), CliError> {
    let vocab = read_vocab(&a.vocab)?;
    let (g1, g2) = (read_graph(&a.a, &vocab)?, read_graph(&a.b, &vocab)?);
    let (cost, mapping, expansions) = match a.method {
        Method::Astar => {
            let o = hged_astar_mapping(&g1, &g2, a.expansion_limit)?;
            (o.cost, o.mapping, Some(o.expansions))
        }
        Method::Brute => {
            let (c, m) = hged_brute_mapping(&g1, &g2)?;
            (c, m, None)
        }
    };
    let mut text = format!("hged = {cost}\nnorm_score = {}\n", normalize_hged(cost as f64, g1.num_nodes(), g2.num_nodes()));
    if let Some(x) = expansions {
        text += &format!("expansions = {x}\n");
    }
    if a.path {
        for op in edit_path_from_mapping(&g1, &g2, &mapping).ops {
            text += &op_text(&op, &vocab);
            text.push('\n');
        }
    }
    emit(None, &text)
}

fn parse_cap(s: &str) -> Result<PairCap, CliError> {
    match s {
        "policy" => Ok(PairCap::Policy),
        "none" => Ok(PairCap::Unlimited),
        n => n
            .parse()
            .map(PairCap::AtMost)
            .map_err(|_| CliError::Usage(format!("--pair-cap: expected policy, none or a count, got {n:?}"))),
    }
}

pub fn dataset(a: &DatasetArgs, seed: u64, out: Option<PathBuf>) -> Result<(), CliError> {
    let dir = require_out(out, "dataset directory")?;
    let cap = parse_cap(&a.pair_cap)?;
    let vocab = read_vocab(&a.vocab)?;
    let corpus = read_corpus(&a.corpus, &vocab)?;
    let (bundle, report) = build_bundle(corpus, vocab, cap, seed, a.expansion_limit)?;
    write_dataset(&bundle, &dir)?;
    let p = &bundle.pairs;
    eprintln!(
        "pairs: {} train, {} val, {} test; {} excluded at the expansion limit",
        p.train.len(),
        p.val.len(),
        p.test.len(),
        report.excluded
    );
    Ok(())
}

fn train_config(a: &TrainArgs, seed: Option<u64>) -> Result<TrainConfig, CliError> {
    let mut cfg = match a.preset {
        Preset::Paper => TrainConfig::default(),
        Preset::Desk => TrainConfig::desk(0),
    };
    if let Some(path) = &a.config {
        cfg.apply_text(&read_text(path)?).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    for kv in &a.overrides {
        let (k, v) = kv.split_once('=').ok_or_else(|| CliError::Usage(format!("--set expects KEY=VALUE, got {kv:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

pub fn train(a: &TrainArgs, seed: Option<u64>, out: Option<PathBuf>) -> Result<(), CliError> {
    let dir = require_out(out, "run directory")?;
    let cfg = train_config(a, seed)?;
    let bundle = read_dataset(&a.data)?;
    let outcome = run_training(&cfg, &bundle, TrainOptions { timing: !a.no_timing, verbose: !a.quiet })?;
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    write_checkpoint(&dir.join("checkpoint.json"), &outcome.checkpoint)?;
    write_log_csv(&dir.join("train_log.csv"), &outcome.log)?;
    let cpath = dir.join("config.txt");
    fs::write(&cpath, cfg.to_text()).map_err(io_err(&cpath))?;
    let m = eval_split(&outcome.checkpoint, &bundle, SplitName::Test, !a.no_timing)?;
    write_metrics_csv(&dir.join("metrics.csv"), &m)?;
    eprintln!(
        "best epoch {} of {}; test mse {:.6} spearman {:.4}",
        outcome.best_epoch,
        outcome.log.len(),
        m.mse,
        m.spearman_rho
    );
    Ok(())
}

fn check_vocab(ckpt: &Checkpoint, bundle: &DatasetBundle) -> Result<(), CliError> {
    let stored: Option<TypeVocab> = serde_json::from_value(ckpt.config["vocab"].clone()).ok();
    match stored {
        Some(v) if v == bundle.vocab => Ok(()),
        Some(_) => Err(CliError::Data("checkpoint and dataset vocabularies differ".into())),
        None => Err(CliError::Data("checkpoint has no vocabulary".into())),
    }
}

fn eval_split(ckpt: &Checkpoint, bundle: &DatasetBundle, split: SplitName, timing: bool) -> Result<MetricsRecord, CliError> {
    check_vocab(ckpt, bundle)?;
    let (model, params) = load_model(ckpt)?;
    let inputs = prepare_corpus(&model, bundle)?;
    let pairs = match split {
        SplitName::Train => &bundle.pairs.train,
        SplitName::Val => &bundle.pairs.val,
        SplitName::Test => &bundle.pairs.test,
    };
    Ok(evaluate(&model, params, pairs, &inputs, timing)?)
}

fn metrics_text(m: &MetricsRecord) -> String {
    format!("{}\n{}\n", METRICS_HEADER.join(","), m.csv_row().join(","))
}

pub fn eval(a: &EvalArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    let ckpt = read_checkpoint(&a.checkpoint)?;
    let bundle = read_dataset(&a.data)?;
    let m = eval_split(&ckpt, &bundle, a.split, !a.no_timing)?;
    match out {
        Some(p) => Ok(write_metrics_csv(&p, &m)?),
        None => emit(None, &metrics_text(&m)),
    }
}

pub fn query(a: &QueryArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    let ckpt = read_checkpoint(&a.checkpoint)?;
    let bundle = read_dataset(&a.data)?;
    check_vocab(&ckpt, &bundle)?;
    let (model, params) = load_model(&ckpt)?;
    let g = match (&a.id, &a.graph) {
        (Some(id), _) => bundle
            .corpus
            .iter()
            .find(|g| &g.id == id)
            .cloned()
            .ok_or_else(|| CliError::Data(format!("no graph {id:?} in the corpus")))?,
        (None, Some(path)) => read_graph(path, &bundle.vocab)?,
        (None, None) => return Err(CliError::Usage("give --id or --graph".into())),
    };
    let inputs = prepare_corpus(&model, &bundle)?;
    let corpus: Vec<(String, GraphInput)> =
        bundle.corpus.iter().map(|c| (c.id.clone(), inputs[&c.id].clone())).collect();
    let hits = rank_corpus(&model, params, &g, &corpus, a.k)?;
    let mut text = String::from("rank,id,score\n");
    for (i, (id, s)) in hits.iter().enumerate() {
        text += &format!("{},{id},{s}\n", i + 1);
    }
    emit(out.as_deref(), &text)
}

pub fn bench(a: &BenchArgs, out: Option<PathBuf>) -> Result<(), CliError> {
    if a.repeat == 0 || a.pairs == 0 {
        return Err(CliError::Usage("--pairs and --repeat must be positive".into()));
    }
    let ckpt = read_checkpoint(&a.checkpoint)?;
    let bundle = read_dataset(&a.data)?;
    check_vocab(&ckpt, &bundle)?;
    let (model, params) = load_model(&ckpt)?;
    let inputs = prepare_corpus(&model, &bundle)?;
    let pairs: Vec<(&GraphInput, &GraphInput)> =
        bundle.pairs.test.iter().take(a.pairs).map(|p| (&inputs[&p.id_a], &inputs[&p.id_b])).collect();
    if pairs.is_empty() {
        return Err(CliError::Data("dataset has no test pairs".into()));
    }
    let r = bench_time(&model, params, &pairs, a.repeat)?;
    let text = format!(
        "variant,pairs,repeat,seconds\nfull,{p},{n},{}\ngraph-match-only,{p},{n},{}\n",
        r.full,
        r.graph_match_only,
        p = r.pairs,
        n = r.repeat
    );
    emit(out.as_deref(), &text)
}

pub fn gradcheck(a: &GradcheckArgs, seed: u64) -> Result<(), CliError> {
    if a.max_nodes == 0 || a.pairs == 0 {
        return Err(CliError::Usage("--pairs and --max-nodes must be positive".into()));
    }
    let mut cfg = ModelConfig::new(3, 3);
    cfg.max_nodes = a.max_nodes;
    let per_param = (a.per_param > 0).then_some(a.per_param);
    let reports = gradcheck_suite(&cfg, a.pairs, a.max_nodes, seed, a.eps, per_param)?;
    let mut text = String::from("pair,max_rel_error,checked,kinks,max_rel_error_with_kinks,worst\n");
    let mut worst = 0.0f64;
    let mut finite = true;
    for (i, r) in reports.iter().enumerate() {
        let at = r.worst.as_ref().map_or_else(String::new, |(n, k)| format!("{n}[{k}]"));
        text += &format!("{i},{},{},{},{},{at}\n", r.max_rel_error, r.checked, r.kinks, r.max_rel_error_all);
        finite &= r.max_rel_error.is_finite();
        worst = worst.max(r.max_rel_error);
    }
    emit(None, &text)?;
    if finite && worst < a.tol {
        Ok(())
    } else {
        Err(CliError::Numeric(format!("max relative error {worst} is not below {}", a.tol)))
    }
}
