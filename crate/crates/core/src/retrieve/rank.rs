use rayon::prelude::*;

use super::{fingerprint, tanimoto, RetrieveError, DEFAULT_RADIUS, DEFAULT_WIDTH};
use crate::fragdag::{rec_frag, FragDag, Lattice};
use crate::gnn::{Model, MolInputs};
use crate::metrics::{cos_hungarian, MatchTolerance};
use crate::molio::{heavy_skeleton, ElementTable, MolGraph};
use crate::probdist::{dirac_spectrum, latent_from_logits, LatentState};
use crate::spectrum::Spectrum;
use crate::Scalar;

pub const DEFAULT_KS: [usize; 4] = [1, 3, 5, 10];

/// Anything that maps a molecule to a spectrum.
pub trait SpectrumPredictor: Sync {
    fn predict(&self, molecule: &MolGraph, energies: &[u32]) -> Result<Spectrum, String>;
}

/// Predicts with a trained model: the in-support Dirac spectrum.
pub struct ModelPredictor<'a, T: Scalar> {
    pub model: &'a Model<T>,
    pub table: &'a ElementTable,
}

impl<T: Scalar> ModelPredictor<'_, T> {
    /// DAG and latent state for a molecule.
    pub fn state(&self, molecule: &MolGraph, energies: &[u32]) -> Result<(FragDag, LatentState<T>), String> {
        let cfg = self.model.config();
        let skel = heavy_skeleton(molecule).map_err(|e| e.to_string())?;
        let dag = rec_frag(&skel, cfg.depth).map_err(|e| e.to_string())?;
        let lattice = Lattice::new(&dag, cfg.j, cfg.mode, self.table);
        let x = MolInputs::new(&dag, &lattice, energies, cfg, self.table).map_err(|e| e.to_string())?;
        let (logits, os) = self.model.logits(&x).map_err(|e| e.to_string())?;
        let state = latent_from_logits(&logits, os, &lattice).map_err(|e| e.to_string())?;
        Ok((dag, state))
    }
}

impl<T: Scalar> SpectrumPredictor for ModelPredictor<'_, T> {
    fn predict(&self, molecule: &MolGraph, energies: &[u32]) -> Result<Spectrum, String> {
        Ok(dirac_spectrum(&self.state(molecule, energies)?.1).normalized())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub molecule: MolGraph,
    pub is_true: bool,
}

/// The target followed by the `size - 1` corpus molecules most similar to
/// it by Tanimoto, ties broken by id. Molecules whose fingerprint equals the
/// target's or an already selected one are skipped.
pub fn build_candidates(target: &MolGraph, corpus: &[MolGraph], size: usize) -> Result<Vec<Candidate>, RetrieveError> {
    if size == 0 {
        return Err(RetrieveError::EmptySize);
    }
    let fp_t = fingerprint(target, DEFAULT_RADIUS, DEFAULT_WIDTH);
    let mut scored: Vec<(f64, &MolGraph, _)> = corpus
        .iter()
        .filter(|m| m.id() != target.id())
        .map(|m| {
            let fp = fingerprint(m, DEFAULT_RADIUS, DEFAULT_WIDTH);
            (tanimoto(&fp_t, &fp).expect("equal widths"), m, fp)
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.id().cmp(b.1.id())));
    let mut seen = vec![fp_t];
    let mut out = vec![Candidate { molecule: target.clone(), is_true: true }];
    for (_, m, fp) in scored {
        if out.len() == size {
            break;
        }
        if seen.contains(&fp) {
            continue;
        }
        seen.push(fp);
        out.push(Candidate { molecule: m.clone(), is_true: false });
    }
    if out.len() < size {
        return Err(RetrieveError::InsufficientCorpus { available: out.len() - 1, needed: size - 1 });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedCandidate {
    pub id: String,
    pub score: f64,
    pub is_true: bool,
    /// Prediction failed; scored 0.
    pub failed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankResult {
    /// Descending score, ties by id ascending.
    pub ranking: Vec<RankedCandidate>,
    /// 1-based rank of the true molecule.
    pub rank: usize,
    /// `(k, true molecule within the top k)`.
    pub hits: Vec<(usize, bool)>,
}

pub fn rank_candidates<P: SpectrumPredictor>(
    truth: &Spectrum,
    energies: &[u32],
    candidates: &[Candidate],
    predictor: &P,
    ks: &[usize],
) -> Result<RankResult, RetrieveError> {
    let trues = candidates.iter().filter(|c| c.is_true).count();
    if trues != 1 {
        return Err(RetrieveError::TrueCount(trues));
    }
    let mut ranking: Vec<RankedCandidate> = candidates
        .par_iter()
        .map(|c| {
            let (score, failed) = match predictor.predict(&c.molecule, energies) {
                Ok(pred) => (cos_hungarian(truth, &pred, MatchTolerance::PPM_10), false),
                Err(e) => {
                    log::warn!("candidate {} failed: {e}", c.molecule.id());
                    (0.0, true)
                }
            };
            RankedCandidate { id: c.molecule.id().to_string(), score, is_true: c.is_true, failed }
        })
        .collect();
    ranking.sort_by(|a, b| b.score.total_cmp(&a.score).then_with(|| a.id.cmp(&b.id)));
    let rank = ranking.iter().position(|r| r.is_true).expect("one true candidate") + 1;
    let hits = ks.iter().map(|&k| (k, rank <= k)).collect();
    Ok(RankResult { ranking, rank, hits })
}
