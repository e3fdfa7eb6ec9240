use msfrag::fragdag::{exhaustive_oracle, iso_classes, rec_frag, wl_hash, Mask};
use msfrag::molio::{heavy_skeleton, parse_smiles, random_molecule, ElementTable, MolGraph, RandomMolConfig};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn skel(s: &str) -> MolGraph {
    heavy_skeleton(&parse_smiles(s).unwrap()).unwrap()
}

fn random_skeleton(seed: u64, max_heavy: usize) -> MolGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cfg = RandomMolConfig { max_heavy, ..Default::default() };
    random_molecule(&mut rng, &cfg, ElementTable::bundled(), "r")
}

/// Brute-force labeled isomorphism between two induced subgraphs.
fn isomorphic(g: &MolGraph, a: Mask, b: Mask) -> bool {
    let xa: Vec<usize> = (0..g.num_atoms()).filter(|&i| a >> i & 1 == 1).collect();
    let xb: Vec<usize> = (0..g.num_atoms()).filter(|&i| b >> i & 1 == 1).collect();
    if xa.len() != xb.len() {
        return false;
    }
    let bond = |u: usize, v: usize| g.neighbors(u).iter().find(|&&(w, _)| w == v).map(|&(_, k)| g.bonds()[k].order);
    fn extend(
        g: &MolGraph,
        xa: &[usize],
        xb: &[usize],
        map: &mut Vec<usize>,
        used: &mut Vec<bool>,
        bond: &dyn Fn(usize, usize) -> Option<msfrag::molio::BondOrder>,
    ) -> bool {
        let k = map.len();
        if k == xa.len() {
            return true;
        }
        for c in 0..xb.len() {
            if used[c] || g.atoms()[xa[k]].element != g.atoms()[xb[c]].element {
                continue;
            }
            if (0..k).all(|p| bond(xa[p], xa[k]) == bond(xb[map[p]], xb[c])) {
                used[c] = true;
                map.push(c);
                if extend(g, xa, xb, map, used, bond) {
                    return true;
                }
                map.pop();
                used[c] = false;
            }
        }
        false
    }
    extend(g, &xa, &xb, &mut Vec::new(), &mut vec![false; xb.len()], &bond)
}

#[test]
fn matches_oracle_on_random_molecules() {
    for seed in 0..60 {
        let g = random_skeleton(seed, 10);
        let dag = rec_frag(&g, g.num_atoms() as u32).unwrap();
        let got: Vec<Mask> = dag.masks().collect();
        assert_eq!(got, exhaustive_oracle(&g).unwrap(), "seed {seed}");
    }
}

#[test]
fn ring_matches_oracle_at_depth_three() {
    // one level opens the ring, the second cuts the resulting path into every
    // arc, so all 31 connected subsets are present
    let g = skel("C1CCCCC1");
    let dag = rec_frag(&g, 3).unwrap();
    let got: Vec<Mask> = dag.masks().collect();
    assert_eq!(got, exhaustive_oracle(&g).unwrap());
    assert_eq!(got.len(), 31);
    assert_eq!(rec_frag(&g, 1).unwrap().num_nodes(), 1);
}

#[test]
fn monotone_in_depth() {
    for seed in 100..120 {
        let g = random_skeleton(seed, 8);
        let mut prev: BTreeSet<Mask> = BTreeSet::new();
        for d in 1..=4 {
            let cur: BTreeSet<Mask> = rec_frag(&g, d).unwrap().masks().collect();
            assert!(prev.is_subset(&cur));
            prev = cur;
        }
    }
}

#[test]
fn edges_are_strict_containment_and_reachable() {
    for seed in 200..230 {
        let g = random_skeleton(seed, 9);
        let dag = rec_frag(&g, 3).unwrap();
        let mut reached = vec![false; dag.num_nodes()];
        reached[dag.root_index()] = true;
        // node order is ascending by id, so every child precedes its parent
        for &(p, c) in dag.edges() {
            let (pm, cm) = (dag.nodes()[p].mask, dag.nodes()[c].mask);
            assert!(cm & pm == cm && cm < pm);
        }
        for i in (0..dag.num_nodes()).rev() {
            if reached[i] {
                for &(p, c) in dag.edges() {
                    if p == i {
                        reached[c] = true;
                    }
                }
            }
        }
        assert!(reached.iter().all(|&r| r));
    }
}

#[test]
fn wl_classes_agree_with_brute_force_isomorphism() {
    for seed in 300..340 {
        let g = random_skeleton(seed, 8);
        let dag = rec_frag(&g, g.num_atoms() as u32).unwrap();
        let classes = iso_classes(&dag, &g);
        let masks: Vec<Mask> = dag.masks().collect();
        for x in 0..masks.len() {
            for y in x + 1..masks.len() {
                if masks[x].count_ones() != masks[y].count_ones() {
                    continue;
                }
                let iso = isomorphic(&g, masks[x], masks[y]);
                assert_eq!(iso, classes[x] == classes[y], "seed {seed}: {:#x} vs {:#x}", masks[x], masks[y]);
            }
        }
    }
}

#[test]
fn deterministic() {
    let g = random_skeleton(5, 10);
    let a = rec_frag(&g, 4).unwrap();
    let b = rec_frag(&g, 4).unwrap();
    assert_eq!(a.nodes(), b.nodes());
    assert_eq!(a.edges(), b.edges());
}

proptest! {
    #[test]
    fn wl_hash_invariant_under_relabeling(seed in 0u64..500, rot in 0usize..12) {
        let g = random_skeleton(seed, 8);
        let n = g.num_atoms();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let p = g.permuted(&perm).unwrap();
        let full: Mask = (1 << n) - 1;
        prop_assert_eq!(wl_hash(&g, full), wl_hash(&p, full));
    }

    #[test]
    fn node_count_invariant_under_relabeling(seed in 0u64..500, rot in 0usize..12) {
        let g = random_skeleton(seed, 7);
        let n = g.num_atoms();
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let p = g.permuted(&perm).unwrap();
        let a = rec_frag(&g, 3).unwrap();
        let b = rec_frag(&p, 3).unwrap();
        prop_assert_eq!(a.num_nodes(), b.num_nodes());
        prop_assert_eq!(a.num_edges(), b.num_edges());
        prop_assert_eq!(a.num_iso_classes(), b.num_iso_classes());
    }
}
