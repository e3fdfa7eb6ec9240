use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SpectrumRecord, Split, TrainError};
use crate::fragdag::{rec_frag, FragDag, Lattice};
use crate::hash::{combine, hash_bytes};
use crate::metrics::{explained, MatchTolerance};
use crate::molio::{heavy_skeleton, Element, ElementTable, IonMode, MolGraph};
use crate::spectrum::{Peak, Spectrum};

/// Ground-truth fragmentation process for synthetic spectra.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleParams {
    /// Bond-break propensity per heavy element, in [`Element::HEAVY`] order.
    /// A bond's propensity is the product of its two atoms' values.
    pub propensity: [f64; 11],
    /// Score multiplier per fragmentation level below the root.
    pub depth_decay: f64,
    /// Weight per hydrogen offset `-j..=j`; normalized on validation.
    pub offset_weights: Vec<f64>,
    /// Intensity moved to out-of-support peaks.
    pub os_fraction: f64,
    /// Energies assigned to records, one drawn per record.
    pub energies: Vec<u32>,
    pub seed: u64,
}

impl OracleParams {
    /// Defaults for hydrogen tolerance `j`: heteroatom bonds break more
    /// readily, and hydrogen losses are favoured over gains.
    pub fn new(j: u32, os_fraction: f64, seed: u64) -> Self {
        let mut propensity = [1.0; 11];
        for (i, el) in Element::HEAVY.iter().enumerate() {
            propensity[i] = match el {
                Element::C => 1.0,
                Element::N => 1.8,
                Element::O => 2.5,
                Element::S => 1.5,
                Element::F | Element::Cl | Element::Br | Element::I => 3.0,
                _ => 1.3,
            };
        }
        let j = j as i32;
        let offset_weights =
            (-j..=j).map(|i| if i <= 0 { (0.6 * i as f64).exp() } else { (-1.2 * i as f64).exp() }).collect();
        OracleParams { propensity, depth_decay: 0.5, offset_weights, os_fraction, energies: vec![10, 20, 40], seed }
    }

    pub fn validate(&self, j: u32) -> Result<(), TrainError> {
        let bad = |m: String| Err(TrainError::Config(m));
        if self.propensity.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return bad("bond-break propensities must be positive".into());
        }
        if !(self.depth_decay.is_finite() && self.depth_decay > 0.0) {
            return bad(format!("depth decay {} must be positive", self.depth_decay));
        }
        if self.offset_weights.len() != 2 * j as usize + 1 {
            return bad(format!("expected {} offset weights, got {}", 2 * j + 1, self.offset_weights.len()));
        }
        if self.offset_weights.iter().any(|w| !(w.is_finite() && *w >= 0.0))
            || self.offset_weights.iter().sum::<f64>() <= 0.0
        {
            return bad("offset weights must be non-negative with a positive sum".into());
        }
        if !(0.0..1.0).contains(&self.os_fraction) {
            return bad(format!("os_fraction {} outside [0, 1)", self.os_fraction));
        }
        if self.energies.is_empty() {
            return bad("at least one collision energy is required".into());
        }
        Ok(())
    }

    fn atom_propensity(&self, el: Element) -> f64 {
        el.heavy_index().map_or(1.0, |i| self.propensity[i])
    }
}

/// Normalized oracle probability of every lattice cell.
///
/// A node's score is the product of propensities over the skeleton bonds
/// crossing its boundary, times `depth_decay^(min depth - 1)`; a cell's
/// score multiplies in the normalized offset weight.
pub fn oracle_distribution(dag: &FragDag, lattice: &Lattice, oracle: &OracleParams) -> Vec<f64> {
    let g = dag.skeleton();
    let wsum: f64 = oracle.offset_weights.iter().sum();
    let node_score: Vec<f64> = dag
        .nodes()
        .iter()
        .map(|n| {
            let mut s = 1.0;
            for b in g.bonds() {
                if (n.mask >> b.a & 1) != (n.mask >> b.b & 1) {
                    s *=
                        oracle.atom_propensity(g.atoms()[b.a].element) * oracle.atom_propensity(g.atoms()[b.b].element);
                }
            }
            let depth = n.depths.iter().copied().min().unwrap_or(1);
            s * oracle.depth_decay.powi(depth as i32 - 1)
        })
        .collect();
    let j = lattice.j() as i32;
    let scores: Vec<f64> = lattice
        .cells()
        .iter()
        .map(|c| node_score[c.node] * oracle.offset_weights[(c.offset + j) as usize] / wsum)
        .collect();
    let z: f64 = scores.iter().sum();
    scores.into_iter().map(|s| s / z).collect()
}

fn record_rng(seed: u64, id: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(combine(seed, hash_bytes(id.as_bytes())))
}

/// Up to three OS peaks placed 50 to 500 ppm away from random support
/// masses, rejecting any that land within 10 ppm of the support.
fn os_peaks(rng: &mut ChaCha8Rng, support: &[f64], q: f64) -> Vec<Peak> {
    let k = rng.random_range(1..=3usize);
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.5..1.5)).collect();
    let total: f64 = raw.iter().sum();
    let mut out = Vec::with_capacity(k);
    for w in raw {
        for _ in 0..1000 {
            let base = support[rng.random_range(0..support.len())];
            let ppm = rng.random_range(50.0..500.0) * if rng.random::<bool>() { 1.0 } else { -1.0 };
            let m = base * (1.0 + ppm * 1e-6);
            if m > 0.0 && !explained(m, support, MatchTolerance::PPM_10) {
                out.push(Peak { mass: m, intensity: q * w / total });
                break;
            }
        }
    }
    out
}

/// One record per molecule, in input order. Deterministic for a seed: each
/// record draws from its own generator keyed by the seed and molecule id.
pub fn synth_generate(
    molecules: &[MolGraph],
    oracle: &OracleParams,
    d: u32,
    j: u32,
    mode: IonMode,
    table: &ElementTable,
) -> Result<Vec<SpectrumRecord>, TrainError> {
    oracle.validate(j)?;
    molecules
        .par_iter()
        .map(|mol| {
            let skel = heavy_skeleton(mol)?;
            let dag = rec_frag(&skel, d)?;
            let lattice = Lattice::new(&dag, j, mode, table);
            let probs = oracle_distribution(&dag, &lattice, oracle);
            let mut mass_p = vec![0.0; lattice.masses().len()];
            for (c, p) in lattice.cells().iter().zip(&probs) {
                mass_p[lattice.formula_mass()[c.formula]] += p;
            }
            let mut rng = record_rng(oracle.seed, mol.id());
            let q = oracle.os_fraction;
            let mut peaks: Vec<Peak> = lattice
                .masses()
                .iter()
                .zip(&mass_p)
                .map(|(&mass, &p)| Peak { mass, intensity: p * (1.0 - q) })
                .collect();
            if q > 0.0 {
                peaks.extend(os_peaks(&mut rng, lattice.masses(), q));
            }
            let energy = oracle.energies[rng.random_range(0..oracle.energies.len())];
            let spectrum = Spectrum::new(peaks).map_err(|e| TrainError::Data(e.to_string()))?.normalized();
            Ok(SpectrumRecord { molecule: mol.clone(), spectrum, energies: vec![energy], split: Split::Train })
        })
        .collect()
}
