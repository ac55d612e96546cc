//! Training, evaluation, retrieval and timing on top of the model.

mod config;
mod eval;
mod metrics;
mod train;

pub use config::{TrainConfig, CONFIG_KEYS};
pub use eval::{
    bench_time, evaluate, gradcheck_suite, jitter_params, metrics_from_predictions, model_gradcheck, predict_pairs,
    query, BenchReport,
};
pub use metrics::{kendall, mse, precision_at_k, rank_desc, spearman, MetricsRecord, METRICS_HEADER};
pub use train::{
    checkpoint_config, load_model, prepare_corpus, train, EpochLog, TrainOptions, TrainOutcome, LOG_HEADER,
};

use std::path::Path;

use thiserror::Error;

use crate::dataset::DatasetError;
use crate::hged::HgedError;
use crate::model::ModelError;
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("dataset has no training pairs")]
    EmptyTrain,
    #[error("non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("unknown graph id {0:?}")]
    UnknownGraph(String),
    #[error("undefined metric: {0}")]
    Undefined(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Hged(#[from] HgedError),
    #[error("csv error on {path}: {reason}")]
    Csv { path: String, reason: String },
}

fn write_rows<const N: usize>(path: &Path, header: [&str; N], rows: impl IntoIterator<Item = [String; N]>) -> Result<(), HarnessError> {
    let err = |e: csv::Error| HarnessError::Csv { path: path.display().to_string(), reason: e.to_string() };
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(header).map_err(err)?;
    for r in rows {
        w.write_record(&r).map_err(err)?;
    }
    w.flush().map_err(|e| err(e.into()))?;
    Ok(())
}

pub fn write_log_csv(path: &Path, log: &[EpochLog]) -> Result<(), HarnessError> {
    write_rows(path, LOG_HEADER, log.iter().map(EpochLog::csv_row))
}

pub fn write_metrics_csv(path: &Path, m: &MetricsRecord) -> Result<(), HarnessError> {
    write_rows(path, METRICS_HEADER, [m.csv_row()])
}
