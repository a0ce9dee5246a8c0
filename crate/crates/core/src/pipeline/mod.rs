//! Config-driven batch runs: shifting, validation, statistics and scoring.

pub mod config;
pub mod manifest;
mod run;

use std::path::Path;

pub use config::{set_dotted, OracleConfig, PipelineConfig, Resources, ShiftParams};
pub use manifest::{
    digest_dir, digest_path, Change, ItemRecord, ItemStatus, ShiftManifest, MANIFEST_FILE, TOOLKIT_VERSION,
};
pub use run::{replay, run_shift, ReplayReport};

use crate::dataset::{dataset_stats, Dataset, DatasetStats};
use crate::document::Task;
use crate::error::Result;
use crate::metrics::{self, PredictionSet, ScoreReport};

pub fn stats(root: impl AsRef<Path>, task: Task) -> Result<DatasetStats> {
    let docs = Dataset::open(root, task)?.load_all()?;
    Ok(dataset_stats(&docs))
}

/// Scores a prediction file against the gold split at `gold`.
pub fn score_files(gold: impl AsRef<Path>, predictions: impl AsRef<Path>, task: Task, tau: f64) -> Result<ScoreReport> {
    let docs = Dataset::open(gold, task)?.load_all()?;
    let pred = PredictionSet::read(predictions)?;
    metrics::score(task, &docs, &pred, tau)
}
