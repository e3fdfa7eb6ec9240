//! Molecular graphs: parsing, validation, formulae, masses and input features.

mod element;
mod features;
mod formula;
mod graph;
mod random;
mod smiles;

use thiserror::Error;

pub use element::{Element, ElementTable, NUM_ELEMENTS, PROTON_MASS};
pub use features::{
    atom_features, bond_features, hybridization, Hybridization, ATOM_FEATURE_WIDTH, BOND_FEATURE_WIDTH, MASS_SCALE,
};
pub use formula::{formula_mass, Formula, IonMode};
pub use graph::{heavy_skeleton, read_molecules, write_molecules, Atom, Bond, BondOrder, MolGraph};
pub use random::{random_corpus, random_molecule, RandomMolConfig};
pub use smiles::{parse_smiles, parse_smiles_table, parse_smiles_with, to_smiles, to_smiles_table, SmilesOptions};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MolError {
    #[error("SMILES parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("valence error: {0}")]
    Valence(String),
    #[error("invalid molecule: {0}")]
    Invalid(String),
    #[error("molecule `{0}` has no heavy atoms")]
    NoHeavyAtoms(String),
    #[error("molecule `{0}` has disconnected heavy atoms")]
    Disconnected(String),
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("bad formula `{0}`")]
    Formula(String),
    #[error("element table: {0}")]
    Table(String),
    #[error("molecule JSON: {0}")]
    Json(String),
    #[error("line {0}: {1}")]
    Line(usize, Box<MolError>),
    #[error("I/O: {0}")]
    Io(String),
}
