//! Seeded random molecule generator for synthetic corpora and property tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use super::element::{Element, ElementTable};
use super::graph::{Atom, Bond, BondOrder, MolGraph};

#[derive(Debug, Clone)]
pub struct RandomMolConfig {
    pub min_heavy: usize,
    pub max_heavy: usize,
    /// Relative sampling weights per element.
    pub element_weights: Vec<(Element, f64)>,
    /// Probability of trying to close each extra ring (at most `max_rings`).
    pub ring_prob: f64,
    pub max_rings: usize,
    /// Per-bond probability of upgrading to a double bond when valence allows.
    pub double_prob: f64,
    pub triple_prob: f64,
}

impl Default for RandomMolConfig {
    fn default() -> Self {
        RandomMolConfig {
            min_heavy: 1,
            max_heavy: 6,
            element_weights: vec![
                (Element::C, 0.62),
                (Element::N, 0.12),
                (Element::O, 0.14),
                (Element::S, 0.04),
                (Element::F, 0.03),
                (Element::Cl, 0.03),
                (Element::P, 0.01),
                (Element::Br, 0.01),
            ],
            ring_prob: 0.3,
            max_rings: 2,
            double_prob: 0.15,
            triple_prob: 0.03,
        }
    }
}

fn sample_element<R: Rng>(rng: &mut R, weights: &[(Element, f64)], min_valence: u8, table: &ElementTable) -> Element {
    let eligible: Vec<_> = weights.iter().filter(|(e, _)| table.valence(*e) >= min_valence).collect();
    let total: f64 = eligible.iter().map(|(_, w)| w).sum();
    let mut x = rng.random::<f64>() * total;
    for (e, w) in &eligible {
        if x < *w {
            return *e;
        }
        x -= w;
    }
    eligible.last().map(|(e, _)| *e).unwrap_or(Element::C)
}

/// Generates one connected, valence-consistent molecule.
pub fn random_molecule<R: Rng>(rng: &mut R, cfg: &RandomMolConfig, table: &ElementTable, id: &str) -> MolGraph {
    let n = rng.random_range(cfg.min_heavy..=cfg.max_heavy.max(cfg.min_heavy));
    loop {
        if let Some(g) = try_build(rng, cfg, table, id, n) {
            return g;
        }
    }
}

fn try_build<R: Rng>(rng: &mut R, cfg: &RandomMolConfig, table: &ElementTable, id: &str, n: usize) -> Option<MolGraph> {
    let mut elements = Vec::with_capacity(n);
    let mut used = Vec::with_capacity(n);
    let mut bonds: Vec<(usize, usize, BondOrder)> = Vec::new();
    let mut pairs = BTreeSet::new();
    let first_min = if n > 1 { 2 } else { 1 };
    elements.push(sample_element(rng, &cfg.element_weights, first_min, table));
    used.push(0u8);
    for k in 1..n {
        let el = sample_element(rng, &cfg.element_weights, 1, table);
        let parents: Vec<usize> = (0..k).filter(|&p| used[p] < table.valence(elements[p])).collect();
        if parents.is_empty() {
            return None;
        }
        let p = parents[rng.random_range(0..parents.len())];
        elements.push(el);
        used.push(1);
        used[p] += 1;
        bonds.push((p, k, BondOrder::Single));
        pairs.insert((p, k));
    }
    let mut rings = 0;
    while rings < cfg.max_rings && n >= 3 && rng.random::<f64>() < cfg.ring_prob {
        let free: Vec<usize> = (0..n).filter(|&a| used[a] < table.valence(elements[a])).collect();
        let mut options = Vec::new();
        for (x, &a) in free.iter().enumerate() {
            for &b in &free[x + 1..] {
                if !pairs.contains(&(a.min(b), a.max(b))) {
                    options.push((a, b));
                }
            }
        }
        if options.is_empty() {
            break;
        }
        let (a, b) = options[rng.random_range(0..options.len())];
        used[a] += 1;
        used[b] += 1;
        bonds.push((a, b, BondOrder::Single));
        pairs.insert((a.min(b), a.max(b)));
        rings += 1;
    }
    for bond in bonds.iter_mut() {
        let (a, b) = (bond.0, bond.1);
        let free_a = table.valence(elements[a]) - used[a];
        let free_b = table.valence(elements[b]) - used[b];
        if free_a >= 2 && free_b >= 2 && rng.random::<f64>() < cfg.triple_prob {
            bond.2 = BondOrder::Triple;
            used[a] += 2;
            used[b] += 2;
        } else if free_a >= 1 && free_b >= 1 && rng.random::<f64>() < cfg.double_prob {
            bond.2 = BondOrder::Double;
            used[a] += 1;
            used[b] += 1;
        }
    }
    let atoms = elements.iter().zip(&used).map(|(&e, &u)| Atom::new(e).with_h((table.valence(e) - u) as u32)).collect();
    let bonds = bonds.into_iter().map(|(a, b, o)| Bond::new(a, b, o)).collect();
    MolGraph::new(id, atoms, bonds).ok()
}

/// `n` molecules from one seeded generator, with ids `{prefix}{index:05}`.
pub fn random_corpus(n: usize, cfg: &RandomMolConfig, table: &ElementTable, seed: u64, prefix: &str) -> Vec<MolGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| random_molecule(&mut rng, cfg, table, &format!("{prefix}{i:05}"))).collect()
}
