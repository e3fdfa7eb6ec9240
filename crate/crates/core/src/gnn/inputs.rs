use super::config::ModelConfig;
use super::fourier::{energy_embedding, fourier_into};
use super::GnnError;
use crate::fragdag::{bits, FragDag, Lattice};
use crate::molio::{
    atom_features, bond_features, Element, ElementTable, Formula, ATOM_FEATURE_WIDTH, BOND_FEATURE_WIDTH,
};
use crate::tensor::Array;
use crate::Scalar;

/// Everything about one molecule the network reads, precomputed once.
#[derive(Debug, Clone)]
pub struct MolInputs<T: Scalar> {
    pub num_atoms: usize,
    pub num_nodes: usize,
    pub atom_x: Array<T>,
    pub bond_x: Array<T>,
    /// Directed messages `src -> dst` carried by `bond`.
    pub msg_src: Vec<usize>,
    pub msg_dst: Vec<usize>,
    pub msg_bond: Vec<usize>,
    /// (atom, node) membership pairs for the fragment mean pool.
    pub member_atom: Vec<usize>,
    pub member_node: Vec<usize>,
    /// Per node: formula Fourier embedding then depth multi-hot.
    pub node_const: Array<T>,
    /// Directed fragment-graph messages (both directions of each DAG edge).
    pub frag_src: Vec<usize>,
    pub frag_dst: Vec<usize>,
    pub frag_edge: Vec<usize>,
    /// (atom, edge) pairs for atoms lost along each DAG edge.
    pub lost_atom: Vec<usize>,
    pub lost_edge: Vec<usize>,
    pub num_frag_edges: usize,
    /// Fourier embedding of the heavy formula lost along each edge.
    pub edge_const: Array<T>,
    /// `1 x T` collision-energy embedding when enabled.
    pub ce: Option<Array<T>>,
    /// Validity of each `(node, offset)` logit.
    pub valid: Vec<bool>,
}

fn formula_embedding<T: Scalar>(f: &Formula, big_t: usize, out: &mut Vec<T>) {
    for el in Element::HEAVY {
        fourier_into(f.count(el) as f64, big_t, out);
    }
}

impl<T: Scalar> MolInputs<T> {
    pub fn new(
        dag: &FragDag,
        lattice: &Lattice,
        energies: &[u32],
        cfg: &ModelConfig,
        table: &ElementTable,
    ) -> Result<Self, GnnError> {
        if dag.depth() > cfg.depth {
            return Err(GnnError::DepthMismatch { dag: dag.depth(), config: cfg.depth });
        }
        if lattice.j() != cfg.j || lattice.num_nodes() != dag.num_nodes() {
            return Err(GnnError::Config(format!(
                "lattice (j={}, {} nodes) does not match model j={} and DAG of {} nodes",
                lattice.j(),
                lattice.num_nodes(),
                cfg.j,
                dag.num_nodes()
            )));
        }
        let g = dag.skeleton();
        let n = g.num_atoms();
        let atom_x = Array::from_f64(n, ATOM_FEATURE_WIDTH, &atom_features(g, table))?;
        let bond_x = Array::from_f64(g.num_bonds(), BOND_FEATURE_WIDTH, &bond_features(g))?;
        let (mut msg_src, mut msg_dst, mut msg_bond) = (Vec::new(), Vec::new(), Vec::new());
        for (k, b) in g.bonds().iter().enumerate() {
            msg_src.extend([b.b, b.a]);
            msg_dst.extend([b.a, b.b]);
            msg_bond.extend([k, k]);
        }

        let t = cfg.fourier_t;
        let dw = cfg.depth_width();
        let (mut member_atom, mut member_node) = (Vec::new(), Vec::new());
        let mut node_const = Vec::with_capacity(dag.num_nodes() * (cfg.formula_width() + dw));
        for (i, node) in dag.nodes().iter().enumerate() {
            for a in bits(node.mask) {
                member_atom.push(a);
                member_node.push(i);
            }
            formula_embedding(&node.formula, t, &mut node_const);
            let mut hot = vec![T::zero(); dw];
            for &d in &node.depths {
                hot[(d as usize - 1).min(dw - 1)] = T::one();
            }
            node_const.extend(hot);
        }
        let node_const = Array::new(dag.num_nodes(), cfg.formula_width() + dw, node_const)?;

        let (mut frag_src, mut frag_dst, mut frag_edge) = (Vec::new(), Vec::new(), Vec::new());
        let (mut lost_atom, mut lost_edge) = (Vec::new(), Vec::new());
        let mut edge_const = Vec::new();
        if cfg.use_frag_edges {
            for (e, &(p, c)) in dag.edges().iter().enumerate() {
                frag_src.extend([c, p]);
                frag_dst.extend([p, c]);
                frag_edge.extend([e, e]);
                let (pn, cn) = (&dag.nodes()[p], &dag.nodes()[c]);
                for a in bits(pn.mask & !cn.mask) {
                    lost_atom.push(a);
                    lost_edge.push(e);
                }
                formula_embedding(&(pn.formula - cn.formula), t, &mut edge_const);
            }
        }
        let num_frag_edges = if cfg.use_frag_edges { dag.num_edges() } else { 0 };
        let edge_const = Array::new(num_frag_edges, cfg.formula_width(), edge_const)?;

        let ce = if cfg.use_collision_energy {
            if energies.is_empty() {
                return Err(GnnError::NoEnergies);
            }
            Some(Array::row_vector(energy_embedding(energies, t)))
        } else {
            None
        };
        Ok(MolInputs {
            num_atoms: n,
            num_nodes: dag.num_nodes(),
            atom_x,
            bond_x,
            msg_src,
            msg_dst,
            msg_bond,
            member_atom,
            member_node,
            node_const,
            frag_src,
            frag_dst,
            frag_edge,
            lost_atom,
            lost_edge,
            num_frag_edges,
            edge_const,
            ce,
            valid: lattice.valid_mask().to_vec(),
        })
    }
}
