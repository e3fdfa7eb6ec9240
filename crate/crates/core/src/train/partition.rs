use crate::metrics::{explained, MatchTolerance};
use crate::spectrum::{Peak, Spectrum};

/// Relative tolerance used to associate observed peaks with predicted
/// masses: 10 ppm of the larger mass.
pub const LOSS_TOLERANCE: MatchTolerance = MatchTolerance::PPM_10;

/// Observed peaks split by whether the predicted support explains them.
#[derive(Debug, Clone, PartialEq)]
pub struct OsPartition {
    pub is_peaks: Vec<Peak>,
    pub os_peaks: Vec<Peak>,
    /// Total OS intensity of the normalized spectrum.
    pub p_os: f64,
}

pub fn os_partition(spectrum: &Spectrum, support: &[f64]) -> OsPartition {
    let mut sorted = support.to_vec();
    sorted.sort_by(f64::total_cmp);
    let (is_peaks, os_peaks): (Vec<Peak>, Vec<Peak>) =
        spectrum.peaks().iter().partition(|p| explained(p.mass, &sorted, LOSS_TOLERANCE));
    let total = spectrum.total();
    let p_os = if total > 0.0 { os_peaks.iter().map(|p| p.intensity).sum::<f64>() / total } else { 0.0 };
    OsPartition { is_peaks, os_peaks, p_os }
}

/// Index of the support mass nearest to `m` among those within tolerance;
/// equal distances resolve to the lower mass. `support` must be sorted.
pub fn nearest_match(m: f64, support: &[f64], tol: MatchTolerance) -> Option<usize> {
    let i = support.partition_point(|&s| s < m);
    let below = (i > 0 && tol.matches(m, support[i - 1])).then(|| i - 1);
    let above = (i < support.len() && tol.matches(m, support[i])).then_some(i);
    match (below, above) {
        (Some(b), Some(a)) => Some(if m - support[b] <= support[a] - m { b } else { a }),
        (b, a) => b.or(a),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_examples() {
        let s = Spectrum::from_pairs(&[(50.0, 0.5), (100.0, 0.5)]).unwrap();
        assert_eq!(os_partition(&s, &[50.0, 100.0]).p_os, 0.0);
        assert_eq!(os_partition(&s, &[]).p_os, 1.0);
        let p = os_partition(&s, &[100.0009]);
        assert_eq!(p.p_os, 0.5);
        assert_eq!(p.is_peaks, vec![Peak { mass: 100.0, intensity: 0.5 }]);
    }

    #[test]
    fn nearest_prefers_closer_then_lower() {
        let sup = [99.9995, 100.0003, 100.0005];
        assert_eq!(nearest_match(100.0, &sup, LOSS_TOLERANCE), Some(1));
        assert_eq!(nearest_match(100.0, &[99.9995, 100.0005], LOSS_TOLERANCE), Some(0));
        assert_eq!(nearest_match(100.0, &[100.01], LOSS_TOLERANCE), None);
    }
}
