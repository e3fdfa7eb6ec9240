use super::ProbError;
use crate::fragdag::Lattice;
use crate::molio::Formula;
use crate::tensor::{Array, Tape, TensorError, Var};
use crate::Scalar;

/// Tape handles for the normalized joint.
#[derive(Debug, Clone, Copy)]
pub struct JointVars {
    /// `cells x 1` log P(n, f) over the lattice's valid cells.
    pub cells: Var,
    /// `1 x 1` log P(OS).
    pub os: Var,
}

/// One masked softmax over every `(node, offset)` logit plus the OS logit.
pub fn tape_log_joint<T: Scalar>(
    t: &mut Tape<'_, T>,
    logits: Var,
    os_logit: Var,
    lattice: &Lattice,
) -> Result<JointVars, TensorError> {
    let (rows, cols) = t.value(logits).shape();
    if rows != lattice.num_nodes() || cols != lattice.width() {
        return Err(TensorError::Shape {
            op: "tape_log_joint",
            detail: format!("logits {rows}x{cols} for lattice {}x{}", lattice.num_nodes(), lattice.width()),
        });
    }
    let total = rows * cols;
    let flat = t.reshape(logits, 1, total)?;
    let row = t.concat_cols(&[flat, os_logit])?;
    let mut valid = lattice.valid_mask().to_vec();
    valid.push(true);
    let lp = t.log_softmax(row, Some(valid))?;
    let col = t.reshape(lp, total + 1, 1)?;
    let cells = t.gather_rows(col, lattice.cells().iter().map(|c| c.flat).collect())?;
    let os = t.gather_rows(col, vec![total])?;
    Ok(JointVars { cells, os })
}

/// Tape handles for the four normalized entropies.
#[derive(Debug, Clone, Copy)]
pub struct EntropyVars {
    pub n: Var,
    pub f: Var,
    pub f_given_n: Var,
    pub n_given_f: Var,
}

/// `1 / log(k)`, or 0 when `k <= 1`.
pub fn inv_log_support(k: usize) -> f64 {
    if k <= 1 {
        0.0
    } else {
        1.0 / (k as f64).ln()
    }
}

/// Normalized entropies of the in-support distribution (the joint over
/// cells renormalized to exclude OS). Conditional entropies normalize each
/// condition by its own support size before taking the expectation.
pub fn tape_normalized_entropies<T: Scalar>(
    t: &mut Tape<'_, T>,
    cells: Var,
    lattice: &Lattice,
) -> Result<EntropyVars, TensorError> {
    let k = lattice.num_cells();
    let node_of: Vec<usize> = lattice.cells().iter().map(|c| c.node).collect();
    let formula_of: Vec<usize> = lattice.cells().iter().map(|c| c.formula).collect();
    let lis = t.segment_logsumexp(cells, vec![0; k], 1)?;
    let neg = t.neg(lis);
    let lq = t.add_scalar(cells, neg)?;
    let q = t.exp(lq);
    let lq_n = t.segment_logsumexp(lq, node_of.clone(), lattice.num_nodes())?;
    let lq_n = t.gather_rows(lq_n, node_of.clone())?;
    let lq_f = t.segment_logsumexp(lq, formula_of.clone(), lattice.formulas().len())?;
    let lq_f = t.gather_rows(lq_f, formula_of.clone())?;

    let per_node = lattice.cells_per_node();
    let per_formula = lattice.cells_per_formula();
    let supported_nodes = per_node.iter().filter(|&&c| c > 0).count();
    let c_n = T::lit(inv_log_support(supported_nodes));
    let c_f = T::lit(inv_log_support(per_formula.len()));
    let w_fn = Array::column(node_of.iter().map(|&n| T::lit(inv_log_support(per_node[n]))).collect());
    let w_nf = Array::column(formula_of.iter().map(|&f| T::lit(inv_log_support(per_formula[f]))).collect());

    let neg_expect = |t: &mut Tape<'_, T>, x: Var, scale: T| -> Result<Var, TensorError> {
        let m = t.mul(q, x)?;
        let s = t.sum(m);
        Ok(t.scale(s, -scale))
    };
    let n = neg_expect(t, lq_n, c_n)?;
    let f = neg_expect(t, lq_f, c_f)?;
    let d_fn = t.sub(lq, lq_n)?;
    let w = t.constant(w_fn);
    let d_fn = t.mul(d_fn, w)?;
    let f_given_n = neg_expect(t, d_fn, T::one())?;
    let d_nf = t.sub(lq, lq_f)?;
    let w = t.constant(w_nf);
    let d_nf = t.mul(d_nf, w)?;
    let n_given_f = neg_expect(t, d_nf, T::one())?;
    Ok(EntropyVars { n, f, f_given_n, n_given_f })
}

/// Entropies in nats (or normalized) of the four latent distributions.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EntropySet<T> {
    pub n: T,
    pub f: T,
    pub f_given_n: T,
    pub n_given_f: T,
    /// Joint entropy H(n, f).
    pub joint: T,
}

/// Fully evaluated latent distributions for one molecule.
#[derive(Debug, Clone)]
pub struct LatentState<T: Scalar> {
    lattice: Lattice,
    log_cell: Vec<T>,
    cell: Vec<T>,
    log_os: T,
    p_os: T,
    node: Vec<T>,
    formula: Vec<T>,
    mass: Vec<T>,
    f_given_n: Vec<Option<T>>,
    n_given_f: Vec<Option<T>>,
    entropy: EntropySet<T>,
    normalized: EntropySet<T>,
}

fn logsumexp<T: Scalar>(xs: impl Iterator<Item = T> + Clone) -> T {
    let m = xs.clone().fold(T::neg_infinity(), T::max);
    if !m.is_finite() {
        return m;
    }
    let mut s = T::zero();
    for x in xs {
        s += (x - m).exp();
    }
    m + s.ln()
}

fn xlogy<T: Scalar>(x: T, y: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x * y
    }
}

/// Normalizes logits into the full set of latent distributions.
pub fn latent_from_logits<T: Scalar>(
    logits: &Array<T>,
    os_logit: T,
    lattice: &Lattice,
) -> Result<LatentState<T>, ProbError> {
    if lattice.num_cells() == 0 && os_logit == T::neg_infinity() {
        return Err(ProbError::AllMasked);
    }
    let mut t = Tape::new();
    let lv = t.constant_ref(logits);
    let ov = t.constant(Array::scalar(os_logit));
    let joint = tape_log_joint(&mut t, lv, ov, lattice).map_err(|e| match e {
        TensorError::AllMasked { .. } => ProbError::AllMasked,
        e => ProbError::Tensor(e),
    })?;
    let log_cell = t.value(joint.cells).data().to_vec();
    let log_os = t.value(joint.os).data()[0];
    Ok(LatentState::from_log_joint(lattice.clone(), log_cell, log_os))
}

impl<T: Scalar> LatentState<T> {
    /// Builds every derived quantity from per-cell log P(n, f) and log P(OS).
    pub fn from_log_joint(lattice: Lattice, log_cell: Vec<T>, log_os: T) -> Self {
        let cells = lattice.cells();
        let nn = lattice.num_nodes();
        let nf = lattice.formulas().len();
        let cell: Vec<T> = log_cell.iter().map(|x| x.exp()).collect();
        let mut log_node = vec![T::neg_infinity(); nn];
        let mut log_formula = vec![T::neg_infinity(); nf];
        {
            let mut by_node: Vec<Vec<T>> = vec![Vec::new(); nn];
            let mut by_formula: Vec<Vec<T>> = vec![Vec::new(); nf];
            for (c, &l) in cells.iter().zip(&log_cell) {
                by_node[c.node].push(l);
                by_formula[c.formula].push(l);
            }
            for (o, v) in log_node.iter_mut().zip(&by_node) {
                *o = logsumexp(v.iter().copied());
            }
            for (o, v) in log_formula.iter_mut().zip(&by_formula) {
                *o = logsumexp(v.iter().copied());
            }
        }
        let node: Vec<T> = log_node.iter().map(|x| x.exp()).collect();
        let formula: Vec<T> = log_formula.iter().map(|x| x.exp()).collect();
        let mut mass = vec![T::zero(); lattice.masses().len()];
        for (fi, &p) in formula.iter().enumerate() {
            mass[lattice.formula_mass()[fi]] += p;
        }
        let f_given_n = cells
            .iter()
            .zip(&log_cell)
            .map(|(c, &l)| log_node[c.node].is_finite().then(|| (l - log_node[c.node]).exp()))
            .collect();
        let n_given_f = cells
            .iter()
            .zip(&log_cell)
            .map(|(c, &l)| log_formula[c.formula].is_finite().then(|| (l - log_formula[c.formula]).exp()))
            .collect();

        let lis = logsumexp(log_cell.iter().copied());
        let mut entropy = EntropySet::default();
        let mut normalized = EntropySet::default();
        if lis.is_finite() {
            let per_node = lattice.cells_per_node();
            let per_formula = lattice.cells_per_formula();
            let supported = per_node.iter().filter(|&&c| c > 0).count();
            let mut hn_cond = T::zero();
            let mut hf_cond = T::zero();
            for (c, &l) in cells.iter().zip(&log_cell) {
                let lq = l - lis;
                let q = lq.exp();
                let (ln_, lf_) = (log_node[c.node] - lis, log_formula[c.formula] - lis);
                entropy.joint -= xlogy(q, lq);
                entropy.n -= xlogy(q, ln_);
                entropy.f -= xlogy(q, lf_);
                entropy.f_given_n -= xlogy(q, lq - ln_);
                entropy.n_given_f -= xlogy(q, lq - lf_);
                hn_cond -= xlogy(q, lq - ln_) * T::lit(inv_log_support(per_node[c.node]));
                hf_cond -= xlogy(q, lq - lf_) * T::lit(inv_log_support(per_formula[c.formula]));
            }
            normalized.n = entropy.n * T::lit(inv_log_support(supported));
            normalized.f = entropy.f * T::lit(inv_log_support(nf));
            normalized.f_given_n = hn_cond;
            normalized.n_given_f = hf_cond;
            normalized.joint = entropy.joint * T::lit(inv_log_support(cells.len()));
        }
        LatentState {
            lattice,
            log_cell,
            cell,
            log_os,
            p_os: log_os.exp(),
            node,
            formula,
            mass,
            f_given_n,
            n_given_f,
            entropy,
            normalized,
        }
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    /// P(n, f) per valid cell, in lattice cell order.
    pub fn joint(&self) -> &[T] {
        &self.cell
    }

    pub fn log_joint(&self) -> &[T] {
        &self.log_cell
    }

    pub fn p_os(&self) -> T {
        self.p_os
    }

    pub fn log_os(&self) -> T {
        self.log_os
    }

    /// P(n) per DAG node.
    pub fn node_marginal(&self) -> &[T] {
        &self.node
    }

    /// P(f) per lattice formula.
    pub fn formula_marginal(&self) -> &[T] {
        &self.formula
    }

    /// P(m) per lattice mass.
    pub fn mass_marginal(&self) -> &[T] {
        &self.mass
    }

    /// P(f | n) per cell; `None` where P(n) = 0.
    pub fn f_given_n(&self) -> &[Option<T>] {
        &self.f_given_n
    }

    /// P(n | f) per cell; `None` where P(f) = 0.
    pub fn n_given_f(&self) -> &[Option<T>] {
        &self.n_given_f
    }

    pub fn formula_prob(&self, f: &Formula) -> T {
        self.lattice.formula_index(f).map_or(T::zero(), |i| self.formula[i])
    }

    /// Entropies in nats of the in-support distribution.
    pub fn entropies(&self) -> &EntropySet<T> {
        &self.entropy
    }

    /// Entropies divided by the log support size (0 for singleton support).
    pub fn normalized_entropies(&self) -> &EntropySet<T> {
        &self.normalized
    }
}
