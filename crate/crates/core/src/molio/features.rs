//! Atom and bond input features for the molecule encoder.
//!
//! Atom layout (45 columns): element (11), heavy degree 0..=10 (11),
//! hybridization SP/SP2/SP3/SP3D/SP3D2 (5), formal charge -2..=2 (5),
//! radicals 0..=4 (5), ring membership true/false (2), aromatic true/false (2),
//! chirality unspecified/CW/CCW (3), then monoisotopic mass * 0.01.

use super::element::ElementTable;
use super::graph::{BondOrder, MolGraph};

pub const ELEMENT_WIDTH: usize = 11;
pub const DEGREE_WIDTH: usize = 11;
pub const HYBRIDIZATION_WIDTH: usize = 5;
pub const CHARGE_WIDTH: usize = 5;
pub const RADICAL_WIDTH: usize = 5;
pub const RING_WIDTH: usize = 2;
pub const AROMATIC_WIDTH: usize = 2;
pub const CHIRALITY_WIDTH: usize = 3;
pub const ATOM_FEATURE_WIDTH: usize = ELEMENT_WIDTH
    + DEGREE_WIDTH
    + HYBRIDIZATION_WIDTH
    + CHARGE_WIDTH
    + RADICAL_WIDTH
    + RING_WIDTH
    + AROMATIC_WIDTH
    + CHIRALITY_WIDTH
    + 1;
pub const BOND_FEATURE_WIDTH: usize = 4;
pub const MASS_SCALE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hybridization {
    Sp,
    Sp2,
    Sp3,
    Sp3d,
    Sp3d2,
}

/// Heuristic orbital hybridization. SP3D and SP3D2 are never produced.
pub fn hybridization(g: &MolGraph, atom: usize) -> Hybridization {
    let mut doubles = 0;
    let mut aromatic = false;
    for &(_, b) in g.neighbors(atom) {
        match g.bonds()[b].order {
            BondOrder::Triple => return Hybridization::Sp,
            BondOrder::Double => doubles += 1,
            BondOrder::Aromatic => aromatic = true,
            BondOrder::Single => {}
        }
    }
    match doubles {
        0 if aromatic || g.atoms()[atom].aromatic => Hybridization::Sp2,
        0 => Hybridization::Sp3,
        1 => Hybridization::Sp2,
        _ => Hybridization::Sp,
    }
}

/// Row-major `num_atoms x ATOM_FEATURE_WIDTH` matrix. Hydrogen atoms get an
/// all-zero element block.
pub fn atom_features(g: &MolGraph, table: &ElementTable) -> Vec<f64> {
    let ring = g.ring_atoms();
    let mut out = vec![0.0; g.num_atoms() * ATOM_FEATURE_WIDTH];
    for (i, atom) in g.atoms().iter().enumerate() {
        let row = &mut out[i * ATOM_FEATURE_WIDTH..(i + 1) * ATOM_FEATURE_WIDTH];
        let mut base = 0;
        if let Some(e) = atom.element.heavy_index() {
            row[base + e] = 1.0;
        }
        base += ELEMENT_WIDTH;
        let heavy_degree = g.neighbors(i).iter().filter(|&&(u, _)| !g.atoms()[u].element.is_hydrogen()).count();
        row[base + heavy_degree.min(DEGREE_WIDTH - 1)] = 1.0;
        base += DEGREE_WIDTH;
        row[base + hybridization(g, i) as usize] = 1.0;
        base += HYBRIDIZATION_WIDTH;
        row[base + (atom.charge + 2) as usize] = 1.0;
        base += CHARGE_WIDTH;
        row[base + atom.radicals as usize] = 1.0;
        base += RADICAL_WIDTH;
        row[base + if ring[i] { 0 } else { 1 }] = 1.0;
        base += RING_WIDTH;
        row[base + if atom.aromatic { 0 } else { 1 }] = 1.0;
        base += AROMATIC_WIDTH;
        // chirality is always unspecified
        row[base] = 1.0;
        base += CHIRALITY_WIDTH;
        row[base] = table.mass(atom.element) * MASS_SCALE;
    }
    out
}

/// Row-major `num_bonds x 4` one-hot bond order matrix.
pub fn bond_features(g: &MolGraph) -> Vec<f64> {
    let mut out = vec![0.0; g.num_bonds() * BOND_FEATURE_WIDTH];
    for (k, bond) in g.bonds().iter().enumerate() {
        out[k * BOND_FEATURE_WIDTH + bond.order.index()] = 1.0;
    }
    out
}
