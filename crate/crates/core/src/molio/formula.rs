use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::{Add, Sub};
use std::str::FromStr;

use super::element::{Element, ElementTable, NUM_ELEMENTS, PROTON_MASS};
use super::MolError;

/// Element counts, hydrogen included.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Formula {
    counts: [u32; NUM_ELEMENTS],
}

/// Whether a mass is for the neutral formula or the protonated `[M+H]+` ion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IonMode {
    #[default]
    Neutral,
    Protonated,
}

impl FromStr for IonMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "neutral" => Ok(IonMode::Neutral),
            "protonated" => Ok(IonMode::Protonated),
            other => Err(format!("unknown ion mode `{other}` (expected neutral|protonated)")),
        }
    }
}

impl fmt::Display for IonMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IonMode::Neutral => "neutral",
            IonMode::Protonated => "protonated",
        })
    }
}

impl Formula {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I: IntoIterator<Item = (Element, u32)>>(pairs: I) -> Self {
        let mut f = Formula::new();
        for (el, n) in pairs {
            f.counts[el.index()] += n;
        }
        f
    }

    #[inline]
    pub fn count(&self, el: Element) -> u32 {
        self.counts[el.index()]
    }

    #[inline]
    pub fn set(&mut self, el: Element, n: u32) {
        self.counts[el.index()] = n;
    }

    #[inline]
    pub fn add_atoms(&mut self, el: Element, n: u32) {
        self.counts[el.index()] += n;
    }

    pub fn total(&self) -> u32 {
        self.counts.iter().sum()
    }

    pub fn heavy_atoms(&self) -> u32 {
        self.total() - self.count(Element::H)
    }

    pub fn is_empty(&self) -> bool {
        self.total() == 0
    }

    /// Same heavy atoms, hydrogen count replaced.
    pub fn with_hydrogens(mut self, h: u32) -> Self {
        self.set(Element::H, h);
        self
    }

    /// Element-wise difference, `None` if any count would go negative.
    pub fn checked_sub(&self, other: &Formula) -> Option<Formula> {
        let mut out = Formula::new();
        for i in 0..NUM_ELEMENTS {
            out.counts[i] = self.counts[i].checked_sub(other.counts[i])?;
        }
        Some(out)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Element, u32)> + '_ {
        Element::ALL.iter().map(move |&e| (e, self.count(e))).filter(|&(_, n)| n > 0)
    }

    /// Sum of monoisotopic masses, plus one proton in protonated mode.
    /// The empty formula has mass zero in either mode.
    pub fn mass(&self, table: &ElementTable, mode: IonMode) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        let neutral: f64 = Element::ALL.iter().map(|&e| self.count(e) as f64 * table.mass(e)).sum();
        match mode {
            IonMode::Neutral => neutral,
            IonMode::Protonated => neutral + PROTON_MASS,
        }
    }
}

/// Free-function form of [`Formula::mass`].
pub fn formula_mass(f: &Formula, mode: IonMode, table: &ElementTable) -> f64 {
    f.mass(table, mode)
}

impl Add for Formula {
    type Output = Formula;

    fn add(mut self, rhs: Formula) -> Formula {
        for i in 0..NUM_ELEMENTS {
            self.counts[i] += rhs.counts[i];
        }
        self
    }
}

impl Sub for Formula {
    type Output = Formula;

    /// Saturating element-wise difference.
    fn sub(mut self, rhs: Formula) -> Formula {
        for i in 0..NUM_ELEMENTS {
            self.counts[i] = self.counts[i].saturating_sub(rhs.counts[i]);
        }
        self
    }
}

/// Hill notation: C, then H, then the rest alphabetically.
impl fmt::Display for Formula {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut order: Vec<Element> = Element::ALL.to_vec();
        order.sort_by_key(|e| match e {
            Element::C => (0, ""),
            Element::H => (1, ""),
            other => (2, other.symbol()),
        });
        for el in order {
            let n = self.count(el);
            match n {
                0 => {}
                1 => write!(f, "{el}")?,
                _ => write!(f, "{el}{n}")?,
            }
        }
        Ok(())
    }
}

impl FromStr for Formula {
    type Err = MolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = s.as_bytes();
        let mut out = Formula::new();
        let mut i = 0;
        while i < bytes.len() {
            if !bytes[i].is_ascii_uppercase() {
                return Err(MolError::Formula(s.to_string()));
            }
            let mut end = i + 1;
            if end < bytes.len() && bytes[end].is_ascii_lowercase() {
                end += 1;
            }
            let el: Element = s[i..end].parse().map_err(|_| MolError::Formula(s.to_string()))?;
            let mut num_end = end;
            while num_end < bytes.len() && bytes[num_end].is_ascii_digit() {
                num_end += 1;
            }
            let n = if num_end == end {
                1
            } else {
                s[end..num_end].parse().map_err(|_| MolError::Formula(s.to_string()))?
            };
            out.add_atoms(el, n);
            i = num_end;
        }
        Ok(out)
    }
}

impl Serialize for Formula {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Formula {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> &'static ElementTable {
        ElementTable::bundled()
    }

    #[test]
    fn methane_masses() {
        let ch4: Formula = "CH4".parse().unwrap();
        let neutral = ch4.mass(table(), IonMode::Neutral);
        // 12 + 4 * 1.00782503207
        assert!((neutral - 16.031_300_128_28).abs() < 1e-9);
        assert!((neutral - 16.03130).abs() < 5e-6);
        let prot = ch4.mass(table(), IonMode::Protonated);
        assert!((prot - neutral - 1.007276).abs() < 1e-6);
    }

    #[test]
    fn empty_formula_has_zero_mass() {
        assert_eq!(Formula::new().mass(table(), IonMode::Neutral), 0.0);
        assert_eq!(Formula::new().mass(table(), IonMode::Protonated), 0.0);
    }

    #[test]
    fn hill_display_round_trips() {
        for s in ["C2H6O", "CH3NO", "C6H5Br", "HClO", "C"] {
            let f: Formula = s.parse().unwrap();
            let back: Formula = f.to_string().parse().unwrap();
            assert_eq!(f, back);
        }
        let f = Formula::from_pairs([(Element::O, 1), (Element::C, 2), (Element::H, 6)]);
        assert_eq!(f.to_string(), "C2H6O");
    }

    #[test]
    fn bad_formula_rejected() {
        assert!("c2".parse::<Formula>().is_err());
        assert!("Xy2".parse::<Formula>().is_err());
    }

    #[test]
    fn mass_is_additive() {
        let a: Formula = "C3H7NO2".parse().unwrap();
        let b: Formula = "CH2ClS".parse().unwrap();
        let lhs = (a + b).mass(table(), IonMode::Neutral);
        let rhs = a.mass(table(), IonMode::Neutral) + b.mass(table(), IonMode::Neutral);
        assert!((lhs - rhs).abs() < 1e-9);
    }

    #[test]
    fn checked_sub_detects_underflow() {
        let a: Formula = "C2H6O".parse().unwrap();
        let b: Formula = "CH4".parse().unwrap();
        assert_eq!(a.checked_sub(&b).unwrap().to_string(), "CH2O");
        assert!(b.checked_sub(&a).is_none());
    }
}
