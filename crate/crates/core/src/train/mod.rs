//! Losses, OS partitioning, optimization, collision-energy merging, dataset
//! splitting and synthetic data generation.

mod config;
mod dataset;
mod loss;
mod merge;
mod optim;
mod partition;
mod split;
mod synth;
mod trainer;

use thiserror::Error;

use crate::fragdag::FragError;
use crate::gnn::GnnError;
use crate::molio::{MolError, MolGraph};
use crate::probdist::ProbError;
use crate::spectrum::{Spectrum, SpectrumError};
use crate::tensor::TensorError;

pub use config::RunConfig;
pub use dataset::{read_dataset, write_dataset, MOLECULES_FILE, SPECTRA_FILE};
pub use loss::{
    cell_mass_index, loss_for_target, loss_with_os, nll_loss, reg_loss, tape_loss, tape_reg_loss, Alphas, LossTarget,
    LossValue, LOG_FLOOR,
};
pub use merge::merge_spectra;
pub use optim::{Adam, AdamConfig};
pub use partition::{nearest_match, os_partition, OsPartition, LOSS_TOLERANCE};
pub use split::{split_dataset, split_of, SplitRatios};
pub use synth::{oracle_distribution, synth_generate, OracleParams};
pub use trainer::{
    evaluate, evaluate_example, example_grad, predict_state, prepare_example, prepare_examples, tape_objective,
    train_model, EpochStats, EvalSummary, Example, ExampleEval, ExampleGrad, ObjectiveVars, TrainConfig, TrainOutcome,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Val,
    Test,
}

/// One molecule with its (merged) spectrum.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRecord {
    pub molecule: MolGraph,
    /// Normalized intensities.
    pub spectrum: Spectrum,
    pub energies: Vec<u32>,
    pub split: Split,
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("data: {0}")]
    Data(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("I/O: {0}")]
    Io(String),
    #[error(transparent)]
    Mol(#[from] MolError),
    #[error(transparent)]
    Frag(#[from] FragError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
}
