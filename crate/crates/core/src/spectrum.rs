//! Centroided spectra and the plain-text MSP-like spectrum file format.
//!
//! ```text
//! ID: mol-1
//! ENERGIES: 10,20
//! NUMPEAKS: 2
//! 31.01839 0.25000000
//! 46.02929 0.75000000
//! ```
//!
//! Records are separated by a blank line. Intensities are renormalized when
//! read, so rounding to 8 decimals does not break normalization.

use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpectrumError {
    #[error("invalid spectrum: {0}")]
    Invalid(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("I/O: {0}")]
    Io(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub mass: f64,
    pub intensity: f64,
}

/// Peaks sorted by mass with unique masses.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Spectrum {
    peaks: Vec<Peak>,
}

impl Spectrum {
    /// Sorts peaks, sums intensities of identical masses and drops zero
    /// intensities. Masses must be finite and positive, intensities finite
    /// and non-negative.
    pub fn new(mut peaks: Vec<Peak>) -> Result<Self, SpectrumError> {
        for p in &peaks {
            if !(p.mass.is_finite() && p.mass > 0.0) {
                return Err(SpectrumError::Invalid(format!("mass {} is not positive and finite", p.mass)));
            }
            if !(p.intensity.is_finite() && p.intensity >= 0.0) {
                return Err(SpectrumError::Invalid(format!("intensity {} at mass {}", p.intensity, p.mass)));
            }
        }
        peaks.sort_by(|a, b| a.mass.total_cmp(&b.mass));
        let mut out: Vec<Peak> = Vec::with_capacity(peaks.len());
        for p in peaks {
            match out.last_mut() {
                Some(last) if last.mass == p.mass => last.intensity += p.intensity,
                _ => out.push(p),
            }
        }
        out.retain(|p| p.intensity > 0.0);
        Ok(Spectrum { peaks: out })
    }

    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self, SpectrumError> {
        Self::new(pairs.iter().map(|&(mass, intensity)| Peak { mass, intensity }).collect())
    }

    pub fn peaks(&self) -> &[Peak] {
        &self.peaks
    }

    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn masses(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.mass).collect()
    }

    pub fn intensities(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.intensity).collect()
    }

    pub fn total(&self) -> f64 {
        self.peaks.iter().map(|p| p.intensity).sum()
    }

    /// Copy scaled to unit total intensity; empty spectra stay empty.
    pub fn normalized(&self) -> Spectrum {
        let t = self.total();
        if t <= 0.0 {
            return Spectrum::default();
        }
        Spectrum { peaks: self.peaks.iter().map(|p| Peak { mass: p.mass, intensity: p.intensity / t }).collect() }
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.total() - 1.0).abs() <= tol
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MspRecord {
    pub id: String,
    pub energies: Vec<u32>,
    pub spectrum: Spectrum,
    /// Predicted out-of-support probability, written as an `OS:` line.
    pub os_prob: Option<f64>,
}

pub fn write_msp<W: Write>(mut w: W, records: &[MspRecord]) -> std::io::Result<()> {
    for (i, r) in records.iter().enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        writeln!(w, "ID: {}", r.id)?;
        let energies: Vec<String> = r.energies.iter().map(|e| e.to_string()).collect();
        writeln!(w, "ENERGIES: {}", energies.join(","))?;
        if let Some(os) = r.os_prob {
            writeln!(w, "OS: {os:.8}")?;
        }
        writeln!(w, "NUMPEAKS: {}", r.spectrum.len())?;
        for p in r.spectrum.peaks() {
            writeln!(w, "{:.5} {:.8}", p.mass, p.intensity)?;
        }
    }
    Ok(())
}

pub fn read_msp<R: BufRead>(r: R) -> Result<Vec<MspRecord>, SpectrumError> {
    let mut out = Vec::new();
    let mut lines = r.lines().enumerate().peekable();
    let parse_err = |line: usize, message: String| SpectrumError::Parse { line: line + 1, message };
    loop {
        while let Some((_, Ok(l))) = lines.peek() {
            if l.trim().is_empty() {
                lines.next();
            } else {
                break;
            }
        }
        let mut os_prob = None;
        let mut header = |key: &str| -> Result<Option<(usize, String)>, SpectrumError> {
            if key == "NUMPEAKS:" {
                if let Some((n, Ok(l))) = lines.peek() {
                    if let Some(v) = l.strip_prefix("OS:") {
                        let v = v.trim();
                        os_prob =
                            Some(v.parse::<f64>().map_err(|_| parse_err(*n, format!("bad OS probability `{v}`")))?);
                        lines.next();
                    }
                }
            }
            match lines.next() {
                None => Ok(None),
                Some((n, Err(e))) => Err(parse_err(n, e.to_string())),
                Some((n, Ok(l))) => match l.strip_prefix(key) {
                    Some(v) => Ok(Some((n, v.trim().to_string()))),
                    None => Err(parse_err(n, format!("expected `{key}`, got `{l}`"))),
                },
            }
        };
        let Some((_, id)) = header("ID:")? else { break };
        let Some((en, energies)) = header("ENERGIES:")? else {
            return Err(SpectrumError::Parse { line: 0, message: format!("record {id}: missing ENERGIES") });
        };
        let energies = if energies.is_empty() {
            Vec::new()
        } else {
            energies
                .split(',')
                .map(|e| e.trim().parse::<u32>().map_err(|_| parse_err(en, format!("bad energy `{e}`"))))
                .collect::<Result<Vec<_>, _>>()?
        };
        let Some((nn, num)) = header("NUMPEAKS:")? else {
            return Err(SpectrumError::Parse { line: 0, message: format!("record {id}: missing NUMPEAKS") });
        };
        let num: usize = num.parse().map_err(|_| parse_err(nn, format!("bad peak count `{num}`")))?;
        let mut peaks = Vec::with_capacity(num);
        for _ in 0..num {
            let Some((n, line)) = lines.next() else {
                return Err(SpectrumError::Parse { line: 0, message: format!("record {id}: expected {num} peaks") });
            };
            let line = line.map_err(|e| parse_err(n, e.to_string()))?;
            let mut parts = line.split_whitespace();
            let (Some(m), Some(i), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(parse_err(n, format!("expected `mass intensity`, got `{line}`")));
            };
            let mass = m.parse::<f64>().map_err(|_| parse_err(n, format!("bad mass `{m}`")))?;
            let intensity = i.parse::<f64>().map_err(|_| parse_err(n, format!("bad intensity `{i}`")))?;
            peaks.push(Peak { mass, intensity });
        }
        let spectrum = Spectrum::new(peaks).map_err(|e| parse_err(nn, e.to_string()))?.normalized();
        out.push(MspRecord { id, energies, spectrum, os_prob });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_and_sorts() {
        let s = Spectrum::from_pairs(&[(40.0, 0.2), (20.0, 0.3), (40.0, 0.5), (65.0, 0.0)]).unwrap();
        assert_eq!(s.masses(), vec![20.0, 40.0]);
        assert!((s.intensities()[1] - 0.7).abs() < 1e-15);
        assert!(Spectrum::from_pairs(&[(-1.0, 1.0)]).is_err());
        assert!(Spectrum::from_pairs(&[(1.0, f64::NAN)]).is_err());
    }

    #[test]
    fn msp_round_trip() {
        let recs = vec![
            MspRecord {
                id: "a".into(),
                energies: vec![10, 20],
                spectrum: Spectrum::from_pairs(&[(31.018_39, 0.25), (46.029_29, 0.75)]).unwrap(),
                os_prob: None,
            },
            MspRecord {
                id: "b".into(),
                energies: vec![35],
                spectrum: Spectrum::from_pairs(&[(100.0, 1.0)]).unwrap(),
                os_prob: Some(0.125),
            },
        ];
        let mut buf = Vec::new();
        write_msp(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("ID: a\nENERGIES: 10,20\nNUMPEAKS: 2\n31.01839 0.25000000\n"));
        let back = read_msp(buf.as_slice()).unwrap();
        assert_eq!(back, recs);
        let mut again = Vec::new();
        write_msp(&mut again, &back).unwrap();
        assert_eq!(again, buf);
    }

    #[test]
    fn msp_errors_carry_line() {
        let err = read_msp("ID: x\nENERGIES: 10\nNUMPEAKS: 1\n12.0 abc\n".as_bytes()).unwrap_err();
        assert_eq!(err, SpectrumError::Parse { line: 4, message: "bad intensity `abc`".into() });
        assert!(read_msp("NAME: x\n".as_bytes()).is_err());
        assert_eq!(read_msp("".as_bytes()).unwrap(), vec![]);
    }
}
