//! Two-stage graph network: a GINE molecule encoder over atoms, a fragment
//! network over DAG nodes, and the joint-logit and out-of-support heads.

mod checkpoint;
mod config;
mod forward;
mod fourier;
mod inputs;
mod params;

use thiserror::Error;

use crate::tensor::TensorError;

pub use checkpoint::{
    read_checkpoint, write_checkpoint, CheckpointHeader, ManifestEntry, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use config::ModelConfig;
pub use forward::{forward, ForwardOut, Model};
pub use fourier::{energy_embedding, fourier_embed};
pub use inputs::MolInputs;
pub use params::{Layout, Linear, Mlp2, ModelParams, ParamSpec};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GnnError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("collision energy is enabled but the energy list is empty")]
    NoEnergies,
    #[error("DAG depth {dag} exceeds model depth {config}")]
    DepthMismatch { dag: u32, config: u32 },
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("I/O: {0}")]
    Io(String),
}
