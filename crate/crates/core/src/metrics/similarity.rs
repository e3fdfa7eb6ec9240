use std::collections::BTreeMap;

use super::{max_weight_assignment, MetricsError};
use crate::spectrum::Spectrum;

/// Mass tolerance for peak matching.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MatchTolerance {
    /// Absolute window in Da.
    AbsoluteDa(f64),
    /// Relative window in parts per million of the larger mass.
    Ppm(f64),
}

impl MatchTolerance {
    pub const PPM_10: MatchTolerance = MatchTolerance::Ppm(10.0);

    pub fn new_ppm(value: f64) -> Result<Self, MetricsError> {
        Self::checked(MatchTolerance::Ppm(value))
    }

    pub fn new_da(value: f64) -> Result<Self, MetricsError> {
        Self::checked(MatchTolerance::AbsoluteDa(value))
    }

    fn checked(t: MatchTolerance) -> Result<Self, MetricsError> {
        let v = match t {
            MatchTolerance::AbsoluteDa(v) | MatchTolerance::Ppm(v) => v,
        };
        if v.is_finite() && v > 0.0 {
            Ok(t)
        } else {
            Err(MetricsError::Tolerance(v))
        }
    }

    /// Whether two masses match; the boundary is inclusive.
    #[inline]
    pub fn matches(&self, a: f64, b: f64) -> bool {
        let d = (a - b).abs();
        match *self {
            MatchTolerance::AbsoluteDa(t) => d <= t,
            MatchTolerance::Ppm(p) => d <= p * 1e-6 * a.max(b),
        }
    }
}

pub const DEFAULT_BIN_DA: f64 = 0.01;
pub const DEFAULT_MAX_DA: f64 = 1500.0;

fn binned(s: &Spectrum, bin_da: f64) -> BTreeMap<u64, f64> {
    let mut bins = BTreeMap::new();
    for p in s.peaks() {
        *bins.entry((p.mass / bin_da).floor() as u64).or_insert(0.0) += p.intensity;
    }
    bins
}

/// Cosine similarity of the two spectra after summing intensities into
/// fixed-width mass bins. Bins are stored sparsely.
pub fn cos_binned(y: &Spectrum, y_hat: &Spectrum, bin_da: f64, max_da: f64) -> Result<f64, MetricsError> {
    let over: Vec<f64> = y.peaks().iter().chain(y_hat.peaks()).map(|p| p.mass).filter(|&m| m >= max_da).collect();
    if !over.is_empty() {
        return Err(MetricsError::MassRange { max_da, masses: over });
    }
    let (a, b) = (binned(y, bin_da), binned(y_hat, bin_da));
    let na: f64 = a.values().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.values().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Ok(0.0);
    }
    let dot: f64 = a.iter().filter_map(|(k, v)| b.get(k).map(|w| v * w)).sum();
    Ok((dot / (na * nb)).clamp(0.0, 1.0))
}

/// Optimal one-to-one matching of `y` peaks to `y_hat` peaks under `tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct HungarianMatch {
    pub score: f64,
    /// `(index in y, index in y_hat)` pairs with positive weight.
    pub pairs: Vec<(usize, usize)>,
}

pub fn hungarian_match(y: &Spectrum, y_hat: &Spectrum, tol: MatchTolerance) -> HungarianMatch {
    let norm = |s: &Spectrum| s.peaks().iter().map(|p| p.intensity * p.intensity).sum::<f64>().sqrt();
    let (na, nb) = (norm(y), norm(y_hat));
    if na == 0.0 || nb == 0.0 {
        return HungarianMatch { score: 0.0, pairs: Vec::new() };
    }
    // Admissible pairs; both peak lists are sorted by mass, so each y peak
    // only scans a window of y_hat.
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for (i, p) in y.peaks().iter().enumerate() {
        let lo = y_hat.peaks().partition_point(|q| q.mass < p.mass && !tol.matches(p.mass, q.mass));
        for (j, q) in y_hat.peaks().iter().enumerate().skip(lo) {
            if tol.matches(p.mass, q.mass) {
                edges.push((i, j, (p.intensity / na) * (q.intensity / nb)));
            } else if q.mass > p.mass {
                break;
            }
        }
    }
    // The optimum decomposes over connected components of the admissible
    // graph, which are small at ppm tolerances.
    let r = y.len();
    let mut parent: Vec<usize> = (0..r + y_hat.len()).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(i, j, _) in &edges {
        let (a, b) = (find(&mut parent, i), find(&mut parent, r + j));
        if a != b {
            parent[a.max(b)] = a.min(b);
        }
    }
    let mut groups: BTreeMap<usize, Vec<(usize, usize, f64)>> = BTreeMap::new();
    for &e in &edges {
        let root = find(&mut parent, e.0);
        groups.entry(root).or_default().push(e);
    }
    let mut score = 0.0;
    let mut pairs = Vec::new();
    for group in groups.values() {
        let mut rows: Vec<usize> = group.iter().map(|e| e.0).collect();
        let mut cols: Vec<usize> = group.iter().map(|e| e.1).collect();
        rows.sort_unstable();
        rows.dedup();
        cols.sort_unstable();
        cols.dedup();
        let mut w = vec![0.0; rows.len() * cols.len()];
        for &(i, j, v) in group {
            let (a, b) = (rows.binary_search(&i).unwrap(), cols.binary_search(&j).unwrap());
            w[a * cols.len() + b] = v;
        }
        for (a, m) in max_weight_assignment(&w, rows.len(), cols.len()).into_iter().enumerate() {
            if let Some(b) = m {
                let v = w[a * cols.len() + b];
                if v > 0.0 {
                    score += v;
                    pairs.push((rows[a], cols[b]));
                }
            }
        }
    }
    pairs.sort_unstable();
    HungarianMatch { score: score.clamp(0.0, 1.0), pairs }
}

/// Cosine similarity under the best one-to-one peak matching within `tol`.
pub fn cos_hungarian(y: &Spectrum, y_hat: &Spectrum, tol: MatchTolerance) -> f64 {
    hungarian_match(y, y_hat, tol).score
}
