//! Candidate retrieval: circular fingerprints, Tanimoto candidate selection
//! and ranking of candidates by predicted-spectrum similarity.

mod fingerprint;
mod rank;

use thiserror::Error;

pub use fingerprint::{fingerprint, tanimoto, Fingerprint, DEFAULT_RADIUS, DEFAULT_WIDTH};
pub use rank::{
    build_candidates, rank_candidates, Candidate, ModelPredictor, RankResult, RankedCandidate, SpectrumPredictor,
    DEFAULT_KS,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RetrieveError {
    #[error("fingerprint widths differ: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("corpus has {available} usable candidates, {needed} needed")]
    InsufficientCorpus { available: usize, needed: usize },
    #[error("candidate list must contain exactly one true molecule, found {0}")]
    TrueCount(usize),
    #[error("candidate set size must be at least 1")]
    EmptySize,
}
