use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use super::MolError;

/// Supported elements. Declaration order is the formula storage order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Element {
    C,
    H,
    N,
    O,
    P,
    S,
    F,
    Cl,
    Br,
    I,
    Se,
    Si,
}

pub const NUM_ELEMENTS: usize = 12;

/// Proton mass in Da, the charge carrier of `[M+H]+` ions.
pub const PROTON_MASS: f64 = 1.007_276_466_812;

impl Element {
    pub const ALL: [Element; NUM_ELEMENTS] = [
        Element::C,
        Element::H,
        Element::N,
        Element::O,
        Element::P,
        Element::S,
        Element::F,
        Element::Cl,
        Element::Br,
        Element::I,
        Element::Se,
        Element::Si,
    ];

    /// Heavy elements in atom-feature one-hot order.
    pub const HEAVY: [Element; 11] = [
        Element::C,
        Element::O,
        Element::N,
        Element::P,
        Element::S,
        Element::F,
        Element::Cl,
        Element::Br,
        Element::I,
        Element::Se,
        Element::Si,
    ];

    #[inline]
    pub fn index(self) -> usize {
        self as usize
    }

    /// Position in [`Element::HEAVY`], `None` for hydrogen.
    pub fn heavy_index(self) -> Option<usize> {
        Self::HEAVY.iter().position(|&e| e == self)
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Element::C => "C",
            Element::H => "H",
            Element::N => "N",
            Element::O => "O",
            Element::P => "P",
            Element::S => "S",
            Element::F => "F",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
            Element::Se => "Se",
            Element::Si => "Si",
        }
    }

    pub fn is_hydrogen(self) -> bool {
        self == Element::H
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

impl FromStr for Element {
    type Err = MolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Element::ALL.iter().copied().find(|e| e.symbol() == s).ok_or_else(|| MolError::UnknownElement(s.to_string()))
    }
}

/// Monoisotopic masses and default valences, one row per element.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementTable {
    mass: [f64; NUM_ELEMENTS],
    valence: [u8; NUM_ELEMENTS],
}

const BUNDLED: &str = include_str!("../../data/elements.tsv");

impl ElementTable {
    /// The table shipped with the crate.
    pub fn bundled() -> &'static ElementTable {
        static TABLE: OnceLock<ElementTable> = OnceLock::new();
        TABLE.get_or_init(|| ElementTable::parse(BUNDLED).expect("bundled element table is valid"))
    }

    /// Parses `symbol<TAB>mass<TAB>valence` lines. `#` starts a comment.
    /// Every supported element must be present exactly once.
    pub fn parse(text: &str) -> Result<ElementTable, MolError> {
        let mut mass = [f64::NAN; NUM_ELEMENTS];
        let mut valence = [0u8; NUM_ELEMENTS];
        let mut seen = [false; NUM_ELEMENTS];
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = || MolError::Table(format!("line {}: expected symbol, mass, valence", lineno + 1));
            let mut cols = line.split('\t').map(str::trim).filter(|c| !c.is_empty());
            let el: Element = cols.next().ok_or_else(bad)?.parse()?;
            let m: f64 = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            let v: u8 = cols.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
            if !(m.is_finite() && m > 0.0) {
                return Err(MolError::Table(format!("line {}: mass must be positive", lineno + 1)));
            }
            if seen[el.index()] {
                return Err(MolError::Table(format!("duplicate element {el}")));
            }
            seen[el.index()] = true;
            mass[el.index()] = m;
            valence[el.index()] = v;
        }
        if let Some(missing) = Element::ALL.iter().find(|e| !seen[e.index()]) {
            return Err(MolError::Table(format!("missing element {missing}")));
        }
        Ok(ElementTable { mass, valence })
    }

    #[inline]
    pub fn mass(&self, el: Element) -> f64 {
        self.mass[el.index()]
    }

    #[inline]
    pub fn valence(&self, el: Element) -> u8 {
        self.valence[el.index()]
    }
}

impl Default for ElementTable {
    fn default() -> Self {
        Self::bundled().clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_table_is_complete() {
        let t = ElementTable::bundled();
        for el in Element::ALL {
            assert!(t.mass(el) > 0.0);
        }
        assert_eq!(t.valence(Element::C), 4);
        assert_eq!(t.valence(Element::Se), 2);
        assert_eq!(t.valence(Element::Cl), 1);
    }

    #[test]
    fn missing_row_rejected() {
        let text = "C\t12.0\t4\n";
        assert!(matches!(ElementTable::parse(text), Err(MolError::Table(_))));
    }

    #[test]
    fn symbols_round_trip() {
        for el in Element::ALL {
            assert_eq!(el.symbol().parse::<Element>().unwrap(), el);
        }
        assert!("Xx".parse::<Element>().is_err());
    }
}
