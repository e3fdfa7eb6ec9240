use super::RetrieveError;
use crate::hash::{combine, hash_seq, mix64};
use crate::molio::MolGraph;

pub const DEFAULT_RADIUS: u32 = 2;
pub const DEFAULT_WIDTH: usize = 2048;

/// Fixed-width bitset of hashed atom environments.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Fingerprint {
    words: Vec<u64>,
    width: usize,
    radius: u32,
}

impl Fingerprint {
    pub fn empty(width: usize, radius: u32) -> Self {
        Fingerprint { words: vec![0; width.div_ceil(64)], width, radius }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn set(&mut self, bit: usize) {
        self.words[bit / 64] |= 1 << (bit % 64);
    }

    pub fn get(&self, bit: usize) -> bool {
        self.words[bit / 64] >> (bit % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> u32 {
        self.words.iter().map(|w| w.count_ones()).sum()
    }

    pub fn ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(|&b| self.get(b))
    }
}

/// Iterated neighbourhood hashing: atom labels start from the element and
/// are refined `radius` times from the sorted (bond order, neighbour label)
/// pairs. Every label from every round sets one bit.
pub fn fingerprint(g: &MolGraph, radius: u32, width: usize) -> Fingerprint {
    let mut fp = Fingerprint::empty(width, radius);
    let mut labels: Vec<u64> = g.atoms().iter().map(|a| mix64(a.element.index() as u64 + 1)).collect();
    for round in 0..=radius {
        for &l in &labels {
            fp.set((l % width as u64) as usize);
        }
        if round == radius {
            break;
        }
        labels = (0..g.num_atoms())
            .map(|i| {
                let mut env: Vec<u64> = g
                    .neighbors(i)
                    .iter()
                    .map(|&(j, k)| combine(g.bonds()[k].order.index() as u64 + 1, labels[j]))
                    .collect();
                env.sort_unstable();
                hash_seq(combine(labels[i], round as u64 + 1), env)
            })
            .collect();
    }
    fp
}

/// `|a & b| / |a | b|`, and 1 when both are empty.
pub fn tanimoto(a: &Fingerprint, b: &Fingerprint) -> Result<f64, RetrieveError> {
    if a.width != b.width {
        return Err(RetrieveError::WidthMismatch(a.width, b.width));
    }
    let (mut inter, mut union) = (0u32, 0u32);
    for (x, y) in a.words.iter().zip(&b.words) {
        inter += (x & y).count_ones();
        union += (x | y).count_ones();
    }
    Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
}
