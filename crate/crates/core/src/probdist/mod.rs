//! Latent distributions over fragments and formulae derived from the joint
//! logits, the resulting mass spectrum, peak annotations and entropies.

mod annotate;
mod latent;
mod mass;

use thiserror::Error;

use crate::tensor::TensorError;

pub use annotate::{
    annotation, iso_aggregate, iso_given_f_entropy_per_formula, n_given_f_entropy_per_formula, normalized_iso_entropy,
    write_annotated_jsonl, Annotation, IsoAggregate,
};
pub use latent::{
    inv_log_support, latent_from_logits, tape_log_joint, tape_normalized_entropies, EntropySet, EntropyVars, JointVars,
    LatentState,
};
pub use mass::{
    dirac_spectrum, gaussian_mixture, mass_distribution, GaussianMixture, MassDistribution, Resolution, ONE_SIGMA_MASS,
    SIGMA_PPM,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbError {
    #[error("every cell of the joint distribution is masked")]
    AllMasked,
    #[error("formula {0} is outside the predicted support")]
    OutsideSupport(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}
