use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use crate::molio::{ATOM_FEATURE_WIDTH, BOND_FEATURE_WIDTH};
use crate::tensor::Array;
use crate::Scalar;

/// Indices of a linear layer's weight and bias within [`ModelParams`].
#[derive(Debug, Clone, Copy)]
pub struct Linear {
    pub w: usize,
    pub b: usize,
}

/// Linear, ReLU, linear.
#[derive(Debug, Clone, Copy)]
pub struct Mlp2 {
    pub first: Linear,
    pub second: Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSpec {
    pub name: String,
    pub rows: usize,
    pub cols: usize,
    /// `(fan_in, fan_out)` for weights, `None` for biases.
    pub fan: Option<(usize, usize)>,
}

/// Parameter slots for a configuration, in manifest order.
#[derive(Debug, Clone)]
pub struct Layout {
    pub atom_in: Linear,
    pub mol_bond: Vec<Linear>,
    pub mol_q: Vec<Mlp2>,
    pub node_in: Linear,
    pub frag_edge: Vec<Linear>,
    pub frag_q: Vec<Mlp2>,
    pub head: Mlp2,
    pub os: Mlp2,
    pub specs: Vec<ParamSpec>,
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Layout {
        let h = cfg.hidden_dim;
        let mut specs = Vec::new();
        let mut linear = |name: String, i: usize, o: usize| {
            specs.push(ParamSpec { name: format!("{name}.w"), rows: i, cols: o, fan: Some((i, o)) });
            specs.push(ParamSpec { name: format!("{name}.b"), rows: 1, cols: o, fan: None });
            Linear { w: specs.len() - 2, b: specs.len() - 1 }
        };
        let atom_in = linear("mol.atom_in".into(), ATOM_FEATURE_WIDTH, h);
        let mut mol_bond = Vec::new();
        let mut mol_q = Vec::new();
        for l in 0..cfg.l1 {
            mol_bond.push(linear(format!("mol.{l}.bond"), BOND_FEATURE_WIDTH, h));
            let first = linear(format!("mol.{l}.q1"), h, h);
            let second = linear(format!("mol.{l}.q2"), h, h);
            mol_q.push(Mlp2 { first, second });
        }
        let node_in = linear("frag.node_in".into(), h + cfg.formula_width() + cfg.depth_width(), h);
        let mut frag_edge = Vec::new();
        let mut frag_q = Vec::new();
        for l in 0..cfg.l2 {
            if cfg.use_frag_edges {
                frag_edge.push(linear(format!("frag.{l}.edge"), h + cfg.formula_width(), h));
            }
            let first = linear(format!("frag.{l}.q1"), h, h);
            let second = linear(format!("frag.{l}.q2"), h, h);
            frag_q.push(Mlp2 { first, second });
        }
        let ce = cfg.ce_width();
        let head = Mlp2 { first: linear("head.1".into(), h + ce, h), second: linear("head.2".into(), h, cfg.width()) };
        let os = Mlp2 { first: linear("os.1".into(), h + ce, h), second: linear("os.2".into(), h, 1) };
        Layout { atom_in, mol_bond, mol_q, node_in, frag_edge, frag_q, head, os, specs }
    }

    pub fn num_scalars(&self) -> usize {
        self.specs.iter().map(|s| s.rows * s.cols).sum()
    }
}

/// All learnable arrays, in [`Layout`] manifest order.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T: Scalar> {
    arrays: Vec<Array<T>>,
}

impl<T: Scalar> ModelParams<T> {
    /// Uniform `+-sqrt(6 / (fan_in + fan_out))` weights, zero biases.
    pub fn init(cfg: &ModelConfig, seed: u64) -> Self {
        let layout = Layout::new(cfg);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arrays = layout
            .specs
            .iter()
            .map(|s| match s.fan {
                Some((i, o)) => {
                    let limit = (6.0 / (i + o) as f64).sqrt();
                    let data = (0..s.rows * s.cols).map(|_| T::lit(rng.random_range(-limit..limit))).collect();
                    Array::new(s.rows, s.cols, data).expect("spec shape")
                }
                None => Array::zeros(s.rows, s.cols),
            })
            .collect();
        ModelParams { arrays }
    }

    pub fn zeros(cfg: &ModelConfig) -> Self {
        let layout = Layout::new(cfg);
        ModelParams { arrays: layout.specs.iter().map(|s| Array::zeros(s.rows, s.cols)).collect() }
    }

    /// Wraps arrays after checking them against the configuration's layout.
    pub fn from_arrays(cfg: &ModelConfig, arrays: Vec<Array<T>>) -> Result<Self, String> {
        let layout = Layout::new(cfg);
        if arrays.len() != layout.specs.len() {
            return Err(format!("expected {} arrays, got {}", layout.specs.len(), arrays.len()));
        }
        for (s, a) in layout.specs.iter().zip(&arrays) {
            if a.shape() != (s.rows, s.cols) {
                return Err(format!("{}: expected {}x{}, got {:?}", s.name, s.rows, s.cols, a.shape()));
            }
        }
        Ok(ModelParams { arrays })
    }

    pub fn arrays(&self) -> &[Array<T>] {
        &self.arrays
    }

    pub fn arrays_mut(&mut self) -> &mut [Array<T>] {
        &mut self.arrays
    }

    pub fn into_arrays(self) -> Vec<Array<T>> {
        self.arrays
    }

    pub fn num_scalars(&self) -> usize {
        self.arrays.iter().map(|a| a.len()).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.arrays.iter().all(|a| a.all_finite())
    }

    pub fn cast<U: Scalar>(&self) -> ModelParams<U> {
        ModelParams {
            arrays: self
                .arrays
                .iter()
                .map(|a| {
                    let data = a.data().iter().map(|&x| U::lit(x.as_f64())).collect();
                    Array::new(a.rows(), a.cols(), data).expect("same shape")
                })
                .collect(),
        }
    }
}
