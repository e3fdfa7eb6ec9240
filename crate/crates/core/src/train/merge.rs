use std::collections::BTreeMap;

use super::TrainError;
use crate::spectrum::{Peak, Spectrum};

/// Averages spectra acquired at different collision energies: every input is
/// normalized, absent peaks count as zero, and the mean is renormalized.
/// Returns the merged spectrum and the sorted union of energies.
pub fn merge_spectra(inputs: &[(Spectrum, Vec<u32>)]) -> Result<(Spectrum, Vec<u32>), TrainError> {
    if inputs.is_empty() {
        return Err(TrainError::Data("cannot merge an empty list of spectra".into()));
    }
    let k = inputs.len() as f64;
    let mut acc: BTreeMap<u64, (f64, f64)> = BTreeMap::new();
    let mut energies = Vec::new();
    for (s, e) in inputs {
        let s = s.normalized();
        for p in s.peaks() {
            acc.entry(p.mass.to_bits()).or_insert((p.mass, 0.0)).1 += p.intensity / k;
        }
        energies.extend_from_slice(e);
    }
    energies.sort_unstable();
    energies.dedup();
    let peaks = acc.into_values().map(|(mass, intensity)| Peak { mass, intensity }).collect();
    let merged = Spectrum::new(peaks).map_err(|e| TrainError::Data(e.to_string()))?.normalized();
    Ok((merged, energies))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        let a = Spectrum::from_pairs(&[(10.0, 0.25), (20.0, 0.75)]).unwrap();
        let (m, e) = merge_spectra(&[(a.clone(), vec![10]), (a.clone(), vec![10])]).unwrap();
        assert_eq!(m, a);
        assert_eq!(e, vec![10]);
        let b = Spectrum::from_pairs(&[(30.0, 1.0)]).unwrap();
        let c = Spectrum::from_pairs(&[(40.0, 1.0)]).unwrap();
        let (m, e) = merge_spectra(&[(b, vec![20]), (c, vec![10])]).unwrap();
        assert_eq!(m.intensities(), vec![0.5, 0.5]);
        assert_eq!(e, vec![10, 20]);
        assert!(merge_spectra(&[]).is_err());
    }
}
