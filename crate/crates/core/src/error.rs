use thiserror::Error;

use crate::fragdag::FragError;
use crate::gnn::GnnError;
use crate::metrics::MetricsError;
use crate::molio::MolError;
use crate::probdist::ProbError;
use crate::retrieve::RetrieveError;
use crate::spectrum::SpectrumError;
use crate::tensor::TensorError;
use crate::train::TrainError;

/// Any error from the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mol(#[from] MolError),
    #[error(transparent)]
    Frag(#[from] FragError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error(transparent)]
    Gnn(#[from] GnnError),
    #[error(transparent)]
    Prob(#[from] ProbError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Retrieve(#[from] RetrieveError),
}

/// Coarse classification used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    /// Invalid input data, files or configuration.
    Data,
    /// Divergence or non-finite values.
    Numerical,
}

fn tensor_kind(e: &TensorError) -> ErrorKind {
    match e {
        TensorError::NonFinite(_) | TensorError::AllMasked { .. } => ErrorKind::Numerical,
        _ => ErrorKind::Data,
    }
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Tensor(e) | Error::Gnn(GnnError::Tensor(e)) | Error::Prob(ProbError::Tensor(e)) => tensor_kind(e),
            Error::Train(TrainError::Numerical(_)) => ErrorKind::Numerical,
            Error::Train(TrainError::Tensor(e)) => tensor_kind(e),
            Error::Prob(ProbError::AllMasked) => ErrorKind::Numerical,
            _ => ErrorKind::Data,
        }
    }
}
