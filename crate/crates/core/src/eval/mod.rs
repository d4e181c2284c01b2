//! Measurements over generated candidates: reconstruction accuracy,
//! validity, novelty, drug hits, edit-distance histograms and latent
//! class distances.

mod classes;
mod histogram;
mod metrics;
mod sweep;

use alloc::string::String;
use thiserror::Error;

use crate::model::ModelError;

pub use classes::{class_distances, latent_class_distances, ClassDistanceReport, ClassRow, ACROSS_ROW};
pub use histogram::{levenshtein_histograms, pooled_histograms, DistanceHistogram, HistogramKind};
pub use metrics::{drug_hit_report, evaluate_run, reconstruction_accuracy, DrugHit, DrugHitReport, GenerationRun, MetricsReport};
pub use sweep::{diversity_sweep, generate_runs, SweepRow};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("class {class:?} has {size} member(s); at least 2 are needed")]
    ClassTooSmall { class: String, size: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}
