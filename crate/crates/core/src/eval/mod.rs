//! Evaluation harness: feature extraction, nearest-neighbour classification, the
//! repeated-trial experiment protocol, checkpoints, metrics and configuration.

pub mod checkpoint;
pub mod config;
pub mod experiment;
pub mod knn;
pub mod metrics;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::ExperimentConfig;
pub use experiment::{
    evaluate, load_data, prepare_split, run_experiment, run_pipeline, run_trials, ExperimentData, ExperimentReport,
    MetricsRecord, Summary, TrialSplit,
};
pub use knn::{accuracy, knn_classify, knn_classify_self, Metric};

use crate::autoencoder::encode;
use crate::numkit::Matrix;
use crate::stacking::StackedModel;
use crate::Result;

/// Latent codes from the full assembled encoder, one row per example.
pub fn extract_features(stacked: &StackedModel, data: &Matrix) -> Result<Matrix> {
    encode(&stacked.assembled, data)
}
