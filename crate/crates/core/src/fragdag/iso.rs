use std::collections::HashMap;

use super::{bits, FragDag, Mask};
use crate::hash::{combine, hash_seq, mix64};
use crate::molio::MolGraph;

/// Weisfeiler-Lehman digest of the subgraph induced on `mask`, over element
/// labels and bond orders. Isomorphic subgraphs always hash equal.
pub fn wl_hash(g: &MolGraph, mask: Mask) -> u64 {
    let atoms: Vec<usize> = bits(mask).collect();
    let mut local = HashMap::with_capacity(atoms.len());
    for (i, &a) in atoms.iter().enumerate() {
        local.insert(a, i);
    }
    let adj: Vec<Vec<(usize, u64)>> = atoms
        .iter()
        .map(|&a| {
            g.neighbors(a)
                .iter()
                .filter_map(|&(b, k)| local.get(&b).map(|&j| (j, g.bonds()[k].order.index() as u64 + 1)))
                .collect()
        })
        .collect();
    let mut labels: Vec<u64> = atoms.iter().map(|&a| mix64(g.atoms()[a].element.index() as u64 + 1)).collect();
    let mut classes = count_distinct(&labels);
    for _ in 0..atoms.len() {
        let next: Vec<u64> = (0..atoms.len())
            .map(|i| {
                let mut msgs: Vec<u64> = adj[i].iter().map(|&(j, order)| combine(order, labels[j])).collect();
                msgs.sort_unstable();
                hash_seq(labels[i], msgs)
            })
            .collect();
        labels = next;
        let c = count_distinct(&labels);
        if c == classes {
            break;
        }
        classes = c;
    }
    let mut edge_labels: Vec<u64> = Vec::new();
    for (i, nbrs) in adj.iter().enumerate() {
        for &(j, order) in nbrs {
            if i < j {
                let (x, y) = (labels[i].min(labels[j]), labels[i].max(labels[j]));
                edge_labels.push(combine(combine(order, x), y));
            }
        }
    }
    let mut sorted = labels;
    sorted.sort_unstable();
    edge_labels.sort_unstable();
    let h = hash_seq(atoms.len() as u64, sorted);
    hash_seq(h, edge_labels)
}

fn count_distinct(labels: &[u64]) -> usize {
    let mut v = labels.to_vec();
    v.sort_unstable();
    v.dedup();
    v.len()
}

/// Class id per mask: the lowest mask sharing its hash.
pub(super) fn assign_classes(g: &MolGraph, masks: impl Iterator<Item = Mask>) -> Vec<Mask> {
    let masks: Vec<Mask> = masks.collect();
    let hashes: Vec<u64> = masks.iter().map(|&m| wl_hash(g, m)).collect();
    let mut lowest: HashMap<u64, Mask> = HashMap::new();
    for (&m, &h) in masks.iter().zip(&hashes) {
        lowest.entry(h).and_modify(|x| *x = (*x).min(m)).or_insert(m);
    }
    hashes.iter().map(|h| lowest[h]).collect()
}

/// Recomputes the isomorphism class of every node, in node order.
pub fn iso_classes(dag: &FragDag, skeleton: &MolGraph) -> Vec<Mask> {
    assign_classes(skeleton, dag.masks())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fragdag::rec_frag;
    use crate::molio::{heavy_skeleton, parse_smiles};

    fn skel(s: &str) -> MolGraph {
        heavy_skeleton(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn propane_carbons_share_class() {
        let g = skel("CCC");
        let dag = rec_frag(&g, 3).unwrap();
        let classes = iso_classes(&dag, &g);
        let class_of = |m: Mask| classes[dag.index_of(m).unwrap()];
        assert_eq!(class_of(0b001), class_of(0b010));
        assert_eq!(class_of(0b001), class_of(0b100));
        assert_eq!(class_of(0b001), 0b001);
        assert_eq!(class_of(0b011), class_of(0b110));
    }

    #[test]
    fn labels_distinguish() {
        let g = skel("CN");
        assert_ne!(wl_hash(&g, 0b01), wl_hash(&g, 0b10));
        let g = skel("C=CC");
        assert_ne!(wl_hash(&g, 0b011), wl_hash(&g, 0b110));
    }

    #[test]
    fn partition_covers_nodes() {
        let g = skel("CC(O)CN");
        let dag = rec_frag(&g, 4).unwrap();
        let classes = iso_classes(&dag, &g);
        assert_eq!(classes.len(), dag.num_nodes());
        for (node, &c) in dag.nodes().iter().zip(&classes) {
            assert!(c <= node.mask);
            assert_eq!(node.iso_class, c);
            assert!(dag.index_of(c).is_some());
        }
    }
}
