use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{bits, iso, FragDag, FragError, FragNode, Mask, MAX_MASK_BITS};
use crate::molio::{Formula, MolGraph};

pub const DEFAULT_NODE_CAP: usize = 200_000;

/// Builds the fragmentation DAG of a heavy-atom skeleton with `d` levels of
/// bond breaking and the default node cap.
pub fn rec_frag(skeleton: &MolGraph, d: u32) -> Result<FragDag, FragError> {
    rec_frag_with_cap(skeleton, d, DEFAULT_NODE_CAP)
}

/// Level-wise form of the recursive fragmentation. Each frontier entry is a
/// fragment together with the bonds still intact inside it; breaking one bond
/// yields the breadth-first components around its two endpoints. When both
/// endpoints stay connected (a ring bond) the fragment is unchanged, so no
/// edge is recorded, but the ring-opened state is expanded at the next level.
pub fn rec_frag_with_cap(skeleton: &MolGraph, d: u32, cap: usize) -> Result<FragDag, FragError> {
    let n = skeleton.num_atoms();
    let m = skeleton.num_bonds();
    if n == 0 {
        return Err(FragError::Empty);
    }
    if n > MAX_MASK_BITS || m > MAX_MASK_BITS {
        return Err(FragError::TooLarge { atoms: n, bonds: m });
    }
    if let Some(h) = skeleton.atoms().iter().position(|a| a.element.is_hydrogen()) {
        return Err(FragError::NotSkeleton(h));
    }
    if !skeleton.is_connected() {
        return Err(FragError::Disconnected);
    }
    if d == 0 {
        return Err(FragError::ZeroDepth);
    }

    let ends: Vec<(usize, usize)> = skeleton.bonds().iter().map(|b| (b.a, b.b)).collect();
    let full_atoms: Mask = low_bits(n);
    let full_bonds: Mask = low_bits(m);

    let mut depths: BTreeMap<Mask, BTreeSet<u32>> = BTreeMap::new();
    depths.insert(full_atoms, BTreeSet::from([1]));
    let mut edges: BTreeSet<(Mask, Mask)> = BTreeSet::new();
    let mut frontier: BTreeSet<(Mask, Mask)> = BTreeSet::from([(full_atoms, full_bonds)]);

    for level in 1..=d {
        let mut next = BTreeSet::new();
        for &(mask, intact) in &frontier {
            for e in bits(intact) {
                let remaining = intact & !(1 << e);
                let (u, v) = ends[e];
                let cu = component(skeleton, u, remaining);
                if cu & (1 << v) != 0 {
                    next.insert((mask, remaining));
                    continue;
                }
                let cv = component(skeleton, v, remaining);
                for child in [cu, cv] {
                    depths.entry(child).or_default().insert(level + 1);
                    if depths.len() > cap {
                        return Err(FragError::NodeCap(cap));
                    }
                    edges.insert((mask, child));
                    next.insert((child, bonds_within(&ends, remaining, child)));
                }
            }
        }
        frontier = next;
    }

    let mut nodes: Vec<FragNode> = depths
        .into_iter()
        .map(|(mask, ds)| {
            let (formula, h) = heavy_formula(skeleton, mask);
            FragNode { mask, formula, h_attached: h, depths: ds.into_iter().collect(), iso_class: mask }
        })
        .collect();
    let classes = iso::assign_classes(skeleton, nodes.iter().map(|n| n.mask));
    for (node, class) in nodes.iter_mut().zip(classes) {
        node.iso_class = class;
    }
    let index: HashMap<Mask, usize> = nodes.iter().enumerate().map(|(i, n)| (n.mask, i)).collect();
    let edges = edges.into_iter().map(|(p, c)| (index[&p], index[&c])).collect();
    let root = index[&full_atoms];
    Ok(FragDag { skeleton: skeleton.clone(), depth: d, nodes, index, edges, root })
}

pub(super) fn low_bits(k: usize) -> Mask {
    if k >= 128 {
        Mask::MAX
    } else {
        (1 << k) - 1
    }
}

/// Atoms reachable from `start` using only bonds in `intact`.
pub(super) fn component(g: &MolGraph, start: usize, intact: Mask) -> Mask {
    let mut seen: Mask = 1 << start;
    let mut queue = vec![start];
    while let Some(a) = queue.pop() {
        for &(b, k) in g.neighbors(a) {
            if intact & (1 << k) != 0 && seen & (1 << b) == 0 {
                seen |= 1 << b;
                queue.push(b);
            }
        }
    }
    seen
}

fn bonds_within(ends: &[(usize, usize)], intact: Mask, atoms: Mask) -> Mask {
    bits(intact)
        .filter(|&k| {
            let (a, b) = ends[k];
            atoms & (1 << a) != 0 && atoms & (1 << b) != 0
        })
        .fold(0, |acc, k| acc | (1 << k))
}

pub(super) fn heavy_formula(g: &MolGraph, mask: Mask) -> (Formula, u32) {
    let mut f = Formula::new();
    let mut h = 0;
    for i in bits(mask) {
        let atom = &g.atoms()[i];
        f.add_atoms(atom.element, 1);
        h += atom.implicit_h;
    }
    (f, h)
}
