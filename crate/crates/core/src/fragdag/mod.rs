//! Heavy-atom fragmentation DAGs built by recursive bond removal.
//!
//! Fragments are identified by a bitmask over heavy-atom indices; the node id
//! is the integer value of that mask.

mod build;
mod dump;
mod hydrogen;
mod iso;
mod lattice;
mod oracle;

use std::collections::HashMap;
use thiserror::Error;

use crate::molio::{Formula, MolGraph};

pub use build::{rec_frag, rec_frag_with_cap, DEFAULT_NODE_CAP};
pub use dump::write_dag_jsonl;
pub use hydrogen::{hydrogen_formulae, is_valid_offset, mass_set};
pub use iso::{iso_classes, wl_hash};
pub use lattice::{Cell, Lattice};
pub use oracle::{exhaustive_oracle, ORACLE_MAX_ATOMS};

/// Bitset over heavy-atom (or bond) indices.
pub type Mask = u128;

/// Largest skeleton (atoms and bonds) a mask can address.
pub const MAX_MASK_BITS: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FragError {
    #[error("skeleton has {atoms} atoms and {bonds} bonds; at most {MAX_MASK_BITS} of each are supported")]
    TooLarge { atoms: usize, bonds: usize },
    #[error("input contains hydrogen atom {0}; fragment the heavy-atom skeleton")]
    NotSkeleton(usize),
    #[error("skeleton has no atoms")]
    Empty,
    #[error("heavy-atom skeleton is disconnected")]
    Disconnected,
    #[error("fragmentation depth must be at least 1")]
    ZeroDepth,
    #[error("fragmentation DAG exceeds the node cap of {0}")]
    NodeCap(usize),
    #[error("exhaustive enumeration limited to {limit} atoms, got {atoms}")]
    OracleLimit { atoms: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct FragNode {
    pub mask: Mask,
    /// Heavy-atom formula of the fragment (no hydrogens).
    pub formula: Formula,
    /// Hydrogens attached to the fragment's atoms in the intact molecule.
    pub h_attached: u32,
    /// Sorted path lengths at which this fragment was reached; the root is 1.
    pub depths: Vec<u32>,
    /// Lowest node id among fragments with the same labeled-graph hash.
    pub iso_class: Mask,
}

impl FragNode {
    pub fn node_id(&self) -> Mask {
        self.mask
    }

    pub fn num_atoms(&self) -> u32 {
        self.mask.count_ones()
    }

    /// Heavy atom indices in ascending order.
    pub fn atoms(&self) -> Vec<usize> {
        bits(self.mask).collect()
    }
}

/// Iterates the set bit positions of a mask in ascending order.
pub fn bits(mut mask: Mask) -> impl Iterator<Item = usize> {
    std::iter::from_fn(move || {
        if mask == 0 {
            None
        } else {
            let i = mask.trailing_zeros() as usize;
            mask &= mask - 1;
            Some(i)
        }
    })
}

#[derive(Debug, Clone)]
pub struct FragDag {
    skeleton: MolGraph,
    depth: u32,
    /// Sorted by node id ascending.
    nodes: Vec<FragNode>,
    index: HashMap<Mask, usize>,
    /// `(parent index, child index)`, sorted.
    edges: Vec<(usize, usize)>,
    root: usize,
}

impl FragDag {
    pub fn skeleton(&self) -> &MolGraph {
        &self.skeleton
    }

    /// Maximum number of bond-breaking levels used to build the DAG.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn nodes(&self) -> &[FragNode] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(parent id, child id)` pairs.
    pub fn edge_ids(&self) -> impl Iterator<Item = (Mask, Mask)> + '_ {
        self.edges.iter().map(|&(p, c)| (self.nodes[p].mask, self.nodes[c].mask))
    }

    pub fn root_index(&self) -> usize {
        self.root
    }

    pub fn root(&self) -> &FragNode {
        &self.nodes[self.root]
    }

    pub fn index_of(&self, id: Mask) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn node(&self, id: Mask) -> Option<&FragNode> {
        self.index_of(id).map(|i| &self.nodes[i])
    }

    /// Width of the depth multi-hot encoding.
    pub fn depth_width(&self) -> usize {
        self.depth as usize + 1
    }

    pub fn masks(&self) -> impl Iterator<Item = Mask> + '_ {
        self.nodes.iter().map(|n| n.mask)
    }

    /// Number of distinct isomorphism classes.
    pub fn num_iso_classes(&self) -> usize {
        let mut ids: Vec<Mask> = self.nodes.iter().map(|n| n.iso_class).collect();
        ids.sort_unstable();
        ids.dedup();
        ids.len()
    }
}
