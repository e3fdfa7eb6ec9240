use super::MatchTolerance;
use crate::spectrum::Spectrum;

/// Unweighted and intensity-weighted recall of a spectrum by a mass support.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recall {
    /// Fraction of peaks with a support mass within tolerance.
    pub r: f64,
    /// Intensity-weighted fraction.
    pub wr: f64,
}

/// Whether any mass of the sorted `support` matches `m`.
pub fn explained(m: f64, support: &[f64], tol: MatchTolerance) -> bool {
    let i = support.partition_point(|&s| s < m);
    (i < support.len() && tol.matches(m, support[i])) || (i > 0 && tol.matches(m, support[i - 1]))
}

pub fn recall_metrics(spectrum: &Spectrum, support: &[f64], tol: MatchTolerance) -> Recall {
    if spectrum.is_empty() {
        return Recall { r: 0.0, wr: 0.0 };
    }
    let mut sorted = support.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut hits = 0usize;
    let mut weight = 0.0;
    for p in spectrum.peaks() {
        if explained(p.mass, &sorted, tol) {
            hits += 1;
            weight += p.intensity;
        }
    }
    Recall { r: hits as f64 / spectrum.len() as f64, wr: weight / spectrum.total() }
}

/// Mean absolute difference between measured and predicted OS probability.
pub fn os_abs_error(pairs: &[(f64, f64)]) -> f64 {
    if pairs.is_empty() {
        return 0.0;
    }
    pairs.iter().map(|(a, b)| (a - b).abs()).sum::<f64>() / pairs.len() as f64
}
