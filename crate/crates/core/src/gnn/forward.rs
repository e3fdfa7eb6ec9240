use super::config::ModelConfig;
use super::inputs::MolInputs;
use super::params::{Layout, Linear, Mlp2, ModelParams};
use crate::tensor::{Array, Tape, TensorError, Var};
use crate::Scalar;

/// Tape handles produced by one forward pass.
#[derive(Debug, Clone, Copy)]
pub struct ForwardOut {
    /// Per-atom embeddings after the molecule GNN.
    pub atom_emb: Var,
    /// Per-node embeddings after the fragment GNN.
    pub node_emb: Var,
    /// `nodes x (2j+1)` unnormalized joint logits (unmasked).
    pub logits: Var,
    /// `1 x 1` out-of-support logit.
    pub os_logit: Var,
}

fn linear<T: Scalar>(t: &mut Tape<'_, T>, p: &[Var], x: Var, l: Linear) -> Result<Var, TensorError> {
    let z = t.matmul(x, p[l.w])?;
    t.add_row(z, p[l.b])
}

fn mlp2<T: Scalar>(t: &mut Tape<'_, T>, p: &[Var], x: Var, m: Mlp2) -> Result<Var, TensorError> {
    let z = linear(t, p, x, m.first)?;
    let z = t.relu(z);
    linear(t, p, z, m.second)
}

/// `h' = q(h + sum_u ReLU(h_u + e_uv))` over directed messages.
#[allow(clippy::too_many_arguments)]
fn gine<T: Scalar>(
    t: &mut Tape<'_, T>,
    p: &[Var],
    h: Var,
    edge_h: Var,
    src: &[usize],
    dst: &[usize],
    edge: &[usize],
    q: Mlp2,
) -> Result<Var, TensorError> {
    let n = t.value(h).rows();
    let hs = t.gather_rows(h, src.to_vec())?;
    let he = t.gather_rows(edge_h, edge.to_vec())?;
    let m = t.add(hs, he)?;
    let m = t.relu(m);
    let agg = t.segment_sum(m, dst.to_vec(), n)?;
    let z = t.add(h, agg)?;
    mlp2(t, p, z, q)
}

/// Runs both GNN stages and the output heads. `p` are the tape handles of
/// `ModelParams::arrays` in manifest order.
pub fn forward<'a, T: Scalar>(
    t: &mut Tape<'a, T>,
    p: &[Var],
    layout: &Layout,
    cfg: &ModelConfig,
    x: &'a MolInputs<T>,
) -> Result<ForwardOut, TensorError> {
    let atom_x = t.constant_ref(&x.atom_x);
    let mut h = linear(t, p, atom_x, layout.atom_in)?;
    let bond_x = t.constant_ref(&x.bond_x);
    for l in 0..cfg.l1 {
        let hb = linear(t, p, bond_x, layout.mol_bond[l])?;
        h = gine(t, p, h, hb, &x.msg_src, &x.msg_dst, &x.msg_bond, layout.mol_q[l])?;
    }
    let atom_emb = h;

    let members = t.gather_rows(atom_emb, x.member_atom.clone())?;
    let pooled = t.segment_mean(members, x.member_node.clone(), x.num_nodes)?;
    let node_const = t.constant_ref(&x.node_const);
    let node_in = t.concat_cols(&[pooled, node_const])?;
    let mut hn = linear(t, p, node_in, layout.node_in)?;

    let edge_in = if cfg.use_frag_edges {
        let lost = t.gather_rows(atom_emb, x.lost_atom.clone())?;
        let lost = t.segment_mean(lost, x.lost_edge.clone(), x.num_frag_edges)?;
        let ec = t.constant_ref(&x.edge_const);
        Some(t.concat_cols(&[lost, ec])?)
    } else {
        None
    };
    for l in 0..cfg.l2 {
        hn = match edge_in {
            Some(ei) => {
                let he = linear(t, p, ei, layout.frag_edge[l])?;
                gine(t, p, hn, he, &x.frag_src, &x.frag_dst, &x.frag_edge, layout.frag_q[l])?
            }
            None => mlp2(t, p, hn, layout.frag_q[l])?,
        };
    }
    let node_emb = hn;

    let ce = x.ce.as_ref().filter(|_| cfg.use_collision_energy).map(|c| t.constant_ref(c));
    let head_in = match ce {
        Some(c) => {
            let rows = t.gather_rows(c, vec![0; x.num_nodes])?;
            t.concat_cols(&[node_emb, rows])?
        }
        None => node_emb,
    };
    let logits = mlp2(t, p, head_in, layout.head)?;

    let graph = t.segment_mean(node_emb, vec![0; x.num_nodes], 1)?;
    let os_in = match ce {
        Some(c) => t.concat_cols(&[graph, c])?,
        None => graph,
    };
    let os_logit = mlp2(t, p, os_in, layout.os)?;
    Ok(ForwardOut { atom_emb, node_emb, logits, os_logit })
}

/// A configuration with its parameters.
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    config: ModelConfig,
    layout: Layout,
    params: ModelParams<T>,
}

impl<T: Scalar> Model<T> {
    pub fn new(config: ModelConfig, params: ModelParams<T>) -> Result<Self, super::GnnError> {
        config.validate()?;
        let layout = Layout::new(&config);
        ModelParams::from_arrays(&config, params.arrays().to_vec()).map_err(super::GnnError::Config)?;
        Ok(Model { config, layout, params })
    }

    /// Fresh model initialized from `config.seed`.
    pub fn init(config: ModelConfig) -> Result<Self, super::GnnError> {
        let params = ModelParams::init(&config, config.seed);
        Self::new(config, params)
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ModelParams<T> {
        &mut self.params
    }

    /// Registers parameters as differentiable leaves.
    pub fn register<'a>(&'a self, t: &mut Tape<'a, T>) -> Vec<Var> {
        self.params.arrays().iter().map(|a| t.param(a)).collect()
    }

    pub fn forward<'a>(
        &'a self,
        t: &mut Tape<'a, T>,
        p: &[Var],
        x: &'a MolInputs<T>,
    ) -> Result<ForwardOut, TensorError> {
        forward(t, p, &self.layout, &self.config, x)
    }

    /// Inference without gradients: `(logits, os_logit)`.
    pub fn logits(&self, x: &MolInputs<T>) -> Result<(Array<T>, T), TensorError> {
        let mut t = Tape::new();
        let p: Vec<Var> = self.params.arrays().iter().map(|a| t.constant_ref(a)).collect();
        let out = forward(&mut t, &p, &self.layout, &self.config, x)?;
        let os = t.value(out.os_logit).data()[0];
        Ok((t.value(out.logits).clone(), os))
    }
}
