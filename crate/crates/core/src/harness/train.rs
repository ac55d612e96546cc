use std::collections::HashMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use super::{predict_pairs, HarnessError, TrainConfig};
use crate::dataset::{DatasetBundle, GraphPair};
use crate::model::{init_params, GraphInput, HeGMN, ModelConfig, Variant};
use crate::tensor::{AdamW, AdamWConfig, Checkpoint, ParamStore, Tape};

pub const LOG_HEADER: [&str; 5] = ["epoch", "train_loss", "val_loss", "best_val_loss", "seconds"];

#[derive(Debug, Clone, PartialEq)]
pub struct EpochLog {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` before validation starts.
    pub val_loss: Option<f64>,
    pub best_val_loss: Option<f64>,
    pub seconds: f64,
}

impl EpochLog {
    pub fn csv_row(&self) -> [String; 5] {
        let opt = |v: Option<f64>| v.map_or_else(String::new, |x| x.to_string());
        [
            self.epoch.to_string(),
            self.train_loss.to_string(),
            opt(self.val_loss),
            opt(self.best_val_loss),
            self.seconds.to_string(),
        ]
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: Vec<EpochLog>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct TrainOptions {
    /// Record wall time in the log; off gives a byte-reproducible log.
    pub timing: bool,
    /// Print one line per validated epoch to stderr.
    pub verbose: bool,
}

impl Default for TrainOptions {
    fn default() -> Self {
        Self { timing: true, verbose: false }
    }
}

/// Prepared inputs for every corpus graph.
pub fn prepare_corpus(model: &HeGMN, bundle: &DatasetBundle) -> Result<HashMap<String, GraphInput>, HarnessError> {
    bundle
        .corpus
        .par_iter()
        .map(|g| Ok((g.id.clone(), model.prepare(g)?)))
        .collect()
}

fn resolve<'a>(
    pairs: &'a [GraphPair],
    inputs: &'a HashMap<String, GraphInput>,
) -> Result<Vec<(&'a GraphInput, &'a GraphInput, f64)>, HarnessError> {
    let get = |id: &str| inputs.get(id).ok_or_else(|| HarnessError::UnknownGraph(id.to_string()));
    pairs.iter().map(|p| Ok((get(&p.id_a)?, get(&p.id_b)?, p.norm_score))).collect()
}

pub fn checkpoint_config(cfg: &TrainConfig, mcfg: &ModelConfig, bundle: &DatasetBundle, best_epoch: usize) -> serde_json::Value {
    json!({
        "train": cfg,
        "model": mcfg,
        "vocab": bundle.vocab,
        "best_epoch": best_epoch,
    })
}

/// Model and parameters stored in a checkpoint written by [`train`].
pub fn load_model(ckpt: &Checkpoint) -> Result<(HeGMN, &ParamStore), HarnessError> {
    let mcfg: ModelConfig = serde_json::from_value(ckpt.config["model"].clone())
        .map_err(|e| HarnessError::Config(format!("checkpoint model config: {e}")))?;
    Ok((HeGMN::new(mcfg)?, &ckpt.params))
}

/// Mini-batch AdamW on squared error with early stopping on validation loss.
///
/// Each epoch visits a seeded shuffle of the training pairs, truncated to
/// `train_pair_cap`. Validation uses a fixed seeded subset of at most
/// `val_pair_cap` pairs and runs every epoch from `val_start_epoch` on.
/// Per-pair gradients in a batch are computed in parallel and summed in
/// batch order, so results do not depend on the worker count.
pub fn train(cfg: &TrainConfig, bundle: &DatasetBundle, opts: TrainOptions) -> Result<TrainOutcome, HarnessError> {
    cfg.validate()?;
    if bundle.pairs.train.is_empty() {
        return Err(HarnessError::EmptyTrain);
    }
    let mcfg = cfg.model_config(bundle.vocab.num_node_types(), bundle.vocab.num_edge_types())?;
    let model = HeGMN::new(mcfg.clone())?;
    let inputs = prepare_corpus(&model, bundle)?;
    let train_set = resolve(&bundle.pairs.train, &inputs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init_params(&mcfg, cfg.seed)?;

    let val_pairs: Vec<GraphPair> = match cfg.val_pair_cap {
        Some(cap) if cap < bundle.pairs.val.len() => {
            let mut pick = rand::seq::index::sample(&mut rng, bundle.pairs.val.len(), cap).into_vec();
            pick.sort_unstable();
            pick.into_iter().map(|i| bundle.pairs.val[i].clone()).collect()
        }
        _ => bundle.pairs.val.clone(),
    };
    resolve(&val_pairs, &inputs)?;
    let val_targets: Vec<f64> = val_pairs.iter().map(|p| p.norm_score).collect();

    let mut opt = AdamW::new(AdamWConfig { lr: cfg.lr, weight_decay: cfg.weight_decay, ..AdamWConfig::default() });
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = Vec::new();
    let mut best: Option<(f64, usize, ParamStore)> = None;

    for epoch in 1..=cfg.max_epochs {
        let start = Instant::now();
        order.shuffle(&mut rng);
        let visit = &order[..cfg.train_pair_cap.map_or(order.len(), |c| c.min(order.len()))];
        let mut loss_sum = 0.0;
        for batch in visit.chunks(cfg.batch_size) {
            let scale = 1.0 / batch.len() as f64;
            let results: Vec<(f64, Vec<(String, Vec<f64>)>)> = batch
                .par_iter()
                .map(|&k| {
                    let (gi, gj, y) = train_set[k];
                    let mut t = Tape::new();
                    let l = model.pair_loss(&mut t, &params, gi, gj, y)?;
                    let v = t.value(l)[0];
                    let scaled = t.scale(l, scale);
                    let grads = t.backward(scaled)?;
                    Ok((v, t.param_grads(grads)))
                })
                .collect::<Result<_, HarnessError>>()?;
            for (v, g) in &results {
                loss_sum += v;
                params.accumulate(g)?;
            }
            opt.step(&mut params)?;
        }
        let train_loss = loss_sum / visit.len() as f64;
        if !train_loss.is_finite() {
            return Err(HarnessError::Diverged { epoch });
        }

        let mut val_loss = None;
        let mut stop = false;
        if epoch >= cfg.val_start_epoch && !val_pairs.is_empty() {
            let preds = predict_pairs(&model, &params, &val_pairs, &inputs, Variant::Full)?;
            let v = super::metrics::mse(&preds, &val_targets);
            if !v.is_finite() {
                return Err(HarnessError::Diverged { epoch });
            }
            val_loss = Some(v);
            match &best {
                Some((b, _, _)) if v >= *b => {}
                _ => best = Some((v, epoch, params.clone())),
            }
            let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
            stop = epoch - best_epoch >= cfg.patience;
        }
        let row = EpochLog {
            epoch,
            train_loss,
            val_loss,
            best_val_loss: best.as_ref().map(|b| b.0),
            seconds: if opts.timing { start.elapsed().as_secs_f64() } else { 0.0 },
        };
        if opts.verbose && val_loss.is_some() {
            eprintln!("epoch {epoch}: train {train_loss:.6} val {:.6} best {:.6}", val_loss.unwrap_or(f64::NAN), row.best_val_loss.unwrap_or(f64::NAN));
        }
        log.push(row);
        if stop {
            break;
        }
    }

    let last = log.len();
    let (best_epoch, params) = match best {
        Some((_, e, p)) => (e, p),
        None => (last, params),
    };
    let config = checkpoint_config(cfg, &mcfg, bundle, best_epoch);
    Ok(TrainOutcome { checkpoint: Checkpoint { params, config }, log, best_epoch })
}
