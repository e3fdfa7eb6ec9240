use super::{cos_hungarian, MatchTolerance, MetricsError};
use crate::fragdag::{FragDag, Mask};
use crate::probdist::{annotation, iso_aggregate, normalized_iso_entropy, LatentState};
use crate::spectrum::Spectrum;
use crate::Scalar;

/// Predictions of every ensemble member for one molecule.
pub struct EnsembleMolecule<'a, T: Scalar> {
    pub dag: &'a FragDag,
    /// One state per model, in model order.
    pub states: &'a [LatentState<T>],
    /// Observed spectrum, when available, for the COS_HUN statistics.
    pub truth: Option<&'a Spectrum>,
}

/// Mean and coefficient of variation across models.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Spread {
    pub mean: f64,
    /// Sample standard deviation over the mean; 0 when the mean is 0.
    pub cv: f64,
}

impl Spread {
    pub fn of(values: &[f64]) -> Spread {
        let k = values.len();
        if k == 0 {
            return Spread::default();
        }
        let mean = values.iter().sum::<f64>() / k as f64;
        if k < 2 || mean == 0.0 {
            return Spread { mean, cv: 0.0 };
        }
        let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1) as f64;
        Spread { mean, cv: var.sqrt() / mean.abs() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub models: usize,
    /// COS_HUN against the truth, averaged per model then summarized.
    pub cos_hun: Spread,
    /// Normalized H(n | f), averaged per model then summarized.
    pub h_n_given_f: Spread,
    /// Normalized H(class | f), averaged per model then summarized.
    pub h_iso_given_f: Spread,
    pub cons: f64,
    pub maj: f64,
    pub cons_iso: f64,
    pub maj_iso: f64,
    /// Formulae that passed the probability filter, over all molecules.
    pub num_formulas: usize,
}

/// Agreement of annotation argmaxes: `(all agree, fraction matching the
/// mode)`. Only the mode's count matters, so mode ties need no rule here.
pub fn agreement(ids: &[Mask]) -> (bool, f64) {
    let mut sorted = ids.to_vec();
    sorted.sort_unstable();
    let mut best_count = 0;
    let mut i = 0;
    while i < sorted.len() {
        let mut k = i;
        while k < sorted.len() && sorted[k] == sorted[i] {
            k += 1;
        }
        best_count = best_count.max(k - i);
        i = k;
    }
    (best_count == ids.len(), best_count as f64 / ids.len() as f64)
}

/// Consensus statistics for `K >= 2` models over a set of molecules.
/// Formulae are kept when every model assigns them probability at least
/// `p_min`. CONS and MAJ are averaged per molecule, then over molecules
/// with at least one kept formula.
pub fn ensemble_consistency<T: Scalar>(
    molecules: &[EnsembleMolecule<'_, T>],
    p_min: f64,
    tol: MatchTolerance,
) -> Result<EnsembleReport, MetricsError> {
    let k = molecules.first().map_or(0, |m| m.states.len());
    if k < 2 {
        return Err(MetricsError::Ensemble(format!("need at least 2 models, got {k}")));
    }
    if molecules.iter().any(|m| m.states.len() != k) {
        return Err(MetricsError::Ensemble("every molecule needs one state per model".into()));
    }
    let mut cos = vec![Vec::new(); k];
    let mut h_nf = vec![0.0; k];
    let mut h_iso = vec![0.0; k];
    let (mut cons, mut maj, mut cons_iso, mut maj_iso) = (0.0, 0.0, 0.0, 0.0);
    let mut counted = 0usize;
    let mut num_formulas = 0usize;
    for m in molecules {
        let lat = m.states[0].lattice();
        let isos: Vec<_> = m.states.iter().map(|s| iso_aggregate(s, m.dag)).collect();
        for (i, s) in m.states.iter().enumerate() {
            h_nf[i] += s.normalized_entropies().n_given_f.as_f64();
            h_iso[i] += normalized_iso_entropy(s, &isos[i]).as_f64();
            if let Some(truth) = m.truth {
                let pred = crate::probdist::dirac_spectrum(s);
                cos[i].push(cos_hungarian(truth, &pred, tol));
            }
        }
        let kept: Vec<usize> = (0..lat.formulas().len())
            .filter(|&f| m.states.iter().all(|s| s.formula_marginal()[f].as_f64() >= p_min))
            .collect();
        if kept.is_empty() {
            continue;
        }
        let (mut c, mut a, mut ci, mut ai) = (0.0, 0.0, 0.0, 0.0);
        for &f in &kept {
            let formula = lat.formulas()[f];
            let mut node_ids = Vec::with_capacity(k);
            let mut class_ids = Vec::with_capacity(k);
            for (s, iso) in m.states.iter().zip(&isos) {
                let ann = annotation(s, &formula).map_err(|e| MetricsError::Ensemble(e.to_string()))?;
                node_ids.push(m.dag.nodes()[ann.argmax].mask);
                let best = iso
                    .joint
                    .iter()
                    .zip(&iso.class_given_f)
                    .filter(|((_, ff, _), _)| *ff == f)
                    .map(|(&(cls, _, _), p)| (cls, p.map_or(0.0, |p| p.as_f64())))
                    .fold(None::<(usize, f64)>, |acc, (cls, p)| match acc {
                        Some((_, bp)) if bp >= p => acc,
                        _ => Some((cls, p)),
                    })
                    .expect("kept formula has cells");
                class_ids.push(iso.class_ids[best.0]);
            }
            let (all, frac) = agreement(&node_ids);
            c += all as u8 as f64;
            a += frac;
            let (all, frac) = agreement(&class_ids);
            ci += all as u8 as f64;
            ai += frac;
        }
        let nk = kept.len() as f64;
        cons += c / nk;
        maj += a / nk;
        cons_iso += ci / nk;
        maj_iso += ai / nk;
        counted += 1;
        num_formulas += kept.len();
    }
    let nm = molecules.len().max(1) as f64;
    let per_model_cos: Vec<f64> =
        cos.iter().filter(|v| !v.is_empty()).map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
    let h_nf: Vec<f64> = h_nf.iter().map(|h| h / nm).collect();
    let h_iso: Vec<f64> = h_iso.iter().map(|h| h / nm).collect();
    let div = counted.max(1) as f64;
    Ok(EnsembleReport {
        models: k,
        cos_hun: Spread::of(&per_model_cos),
        h_n_given_f: Spread::of(&h_nf),
        h_iso_given_f: Spread::of(&h_iso),
        cons: cons / div,
        maj: maj / div,
        cons_iso: cons_iso / div,
        maj_iso: maj_iso / div,
        num_formulas,
    })
}
