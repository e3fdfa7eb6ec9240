//! Tandem mass spectrum prediction over recursive heavy-atom fragmentation
//! DAGs: molecule I/O, fragment enumeration, a small autodiff engine, the
//! graph network, latent distributions, training, metrics and retrieval.
//!
//! Numeric code is generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar for common use.

pub mod fragdag;
pub mod gnn;
pub mod hash;
pub mod metrics;
pub mod molio;
pub mod probdist;
pub mod retrieve;
pub mod scalar;
pub mod spectrum;
pub mod tensor;
pub mod train;

mod error;

pub use error::{Error, ErrorKind};
pub use scalar::Scalar;

pub type Array64 = tensor::Array<f64>;
pub type Array32 = tensor::Array<f32>;
pub type Tape64<'a> = tensor::Tape<'a, f64>;
pub type Tape32<'a> = tensor::Tape<'a, f32>;
pub type Model64 = gnn::Model<f64>;
pub type Model32 = gnn::Model<f32>;
pub type ModelParams64 = gnn::ModelParams<f64>;
pub type MolInputs64 = gnn::MolInputs<f64>;
pub type LatentState64 = probdist::LatentState<f64>;
pub type Example64 = train::Example<f64>;
