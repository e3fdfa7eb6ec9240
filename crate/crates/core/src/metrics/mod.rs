//! Spectrum similarity, recall and ensemble-consistency metrics.

mod assignment;
mod ensemble;
mod recall;
mod similarity;

use thiserror::Error;

pub use assignment::max_weight_assignment;
pub use ensemble::{agreement, ensemble_consistency, EnsembleMolecule, EnsembleReport, Spread};
pub use recall::{explained, os_abs_error, recall_metrics, Recall};
pub use similarity::{
    cos_binned, cos_hungarian, hungarian_match, HungarianMatch, MatchTolerance, DEFAULT_BIN_DA, DEFAULT_MAX_DA,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("tolerance must be positive and finite, got {0}")]
    Tolerance(f64),
    #[error("masses at or above {max_da} Da: {masses:?}")]
    MassRange { max_da: f64, masses: Vec<f64> },
    #[error("ensemble: {0}")]
    Ensemble(String),
}
