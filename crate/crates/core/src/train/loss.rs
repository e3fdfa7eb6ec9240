use super::partition::{nearest_match, LOSS_TOLERANCE};
use crate::fragdag::Lattice;
use crate::probdist::{EntropySet, EntropyVars, JointVars, LatentState};
use crate::spectrum::Spectrum;
use crate::tensor::{Array, Tape, TensorError, Var};
use crate::Scalar;

/// Floor applied to log P(OS) when the target has OS mass but the model
/// assigns (numerically) none.
pub const LOG_FLOOR: f64 = -745.0;

/// An observed spectrum projected onto a lattice's predicted masses.
#[derive(Debug, Clone, PartialEq)]
pub struct LossTarget {
    /// Predicted mass indices with matched intensity, ascending.
    pub mass_idx: Vec<usize>,
    /// Summed observed intensity per entry of `mass_idx`.
    pub weights: Vec<f64>,
    /// Observed intensity no predicted mass explains.
    pub p_os: f64,
}

impl LossTarget {
    /// Matches each peak of `spectrum` (normalized) to the nearest predicted
    /// mass within 10 ppm; intensities of peaks sharing a mass are summed.
    pub fn new(spectrum: &Spectrum, masses: &[f64]) -> Self {
        let total = spectrum.total();
        let mut acc = vec![0.0; masses.len()];
        let mut p_os = 0.0;
        for p in spectrum.peaks() {
            let w = if total > 0.0 { p.intensity / total } else { 0.0 };
            match nearest_match(p.mass, masses, LOSS_TOLERANCE) {
                Some(i) => acc[i] += w,
                None => p_os += w,
            }
        }
        let (mass_idx, weights) = acc.into_iter().enumerate().filter(|(_, w)| *w > 0.0).unzip();
        LossTarget { mass_idx, weights, p_os }
    }

    /// Entropy of the target after matching, with all OS intensity as one
    /// outcome. This is the minimum attainable OS-aware loss.
    pub fn entropy(&self) -> f64 {
        let h: f64 = self.weights.iter().filter(|&&w| w > 0.0).map(|w| -w * w.ln()).sum();
        if self.p_os > 0.0 {
            h - self.p_os * self.p_os.ln()
        } else {
            h
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossValue {
    pub value: f64,
    /// Whether log P(OS) hit [`LOG_FLOOR`].
    pub clamped: bool,
}

fn log_mass<T: Scalar>(state: &LatentState<T>, i: usize) -> f64 {
    state.mass_marginal()[i].as_f64().ln().max(LOG_FLOOR)
}

/// Cross-entropy over the matched peaks only: `-sum P(m) log P_theta(m)`.
pub fn nll_loss<T: Scalar>(state: &LatentState<T>, spectrum: &Spectrum) -> f64 {
    let target = LossTarget::new(spectrum, state.lattice().masses());
    target.mass_idx.iter().zip(&target.weights).map(|(&i, &w)| -w * log_mass(state, i)).sum()
}

/// Matched-peak cross-entropy plus `-P(OS) log P_theta(OS)`.
pub fn loss_with_os<T: Scalar>(state: &LatentState<T>, spectrum: &Spectrum) -> LossValue {
    let target = LossTarget::new(spectrum, state.lattice().masses());
    loss_for_target(state, &target)
}

pub fn loss_for_target<T: Scalar>(state: &LatentState<T>, target: &LossTarget) -> LossValue {
    let is: f64 = target.mass_idx.iter().zip(&target.weights).map(|(&i, &w)| -w * log_mass(state, i)).sum();
    if target.p_os == 0.0 {
        return LossValue { value: is, clamped: false };
    }
    let log_os = state.log_os().as_f64();
    let clamped = log_os.is_nan() || log_os < LOG_FLOOR;
    LossValue { value: is - target.p_os * log_os.max(LOG_FLOOR), clamped }
}

/// Per-cell mass index, the segment map from cells to predicted masses.
pub fn cell_mass_index(lattice: &Lattice) -> Vec<usize> {
    lattice.cells().iter().map(|c| lattice.formula_mass()[c.formula]).collect()
}

/// The OS-aware loss on the tape. Returns the loss and whether the OS log
/// probability was clamped.
pub fn tape_loss<T: Scalar>(
    t: &mut Tape<'_, T>,
    joint: JointVars,
    lattice: &Lattice,
    target: &LossTarget,
) -> Result<(Var, bool), TensorError> {
    let lm = t.segment_logsumexp(joint.cells, cell_mass_index(lattice), lattice.masses().len())?;
    let picked = t.gather_rows(lm, target.mass_idx.clone())?;
    let picked = t.clamp_min(picked, T::lit(LOG_FLOOR));
    let w = t.constant(Array::column(target.weights.iter().map(|&w| T::lit(-w)).collect()));
    let prod = t.mul(picked, w)?;
    let mut loss = t.sum(prod);
    let mut clamped = false;
    if target.p_os > 0.0 {
        let log_os = t.value(joint.os).data()[0].as_f64();
        clamped = log_os.is_nan() || log_os < LOG_FLOOR;
        let os = t.clamp_min(joint.os, T::lit(LOG_FLOOR));
        let os = t.scale(os, T::lit(-target.p_os));
        loss = t.add(loss, os)?;
    }
    Ok((loss, clamped))
}

/// Entropy regularization weights for the four latent distributions.
#[derive(Debug, Clone, Copy, PartialEq, Default, serde::Serialize, serde::Deserialize)]
pub struct Alphas {
    pub n: f64,
    pub f: f64,
    pub f_given_n: f64,
    pub n_given_f: f64,
}

impl Alphas {
    pub fn is_zero(&self) -> bool {
        self.n == 0.0 && self.f == 0.0 && self.f_given_n == 0.0 && self.n_given_f == 0.0
    }
}

/// `loss + sum alpha_x * normalized H(x)`.
pub fn reg_loss<T: Scalar>(loss: f64, normalized: &EntropySet<T>, alphas: &Alphas) -> f64 {
    loss + alphas.n * normalized.n.as_f64()
        + alphas.f * normalized.f.as_f64()
        + alphas.f_given_n * normalized.f_given_n.as_f64()
        + alphas.n_given_f * normalized.n_given_f.as_f64()
}

pub fn tape_reg_loss<T: Scalar>(
    t: &mut Tape<'_, T>,
    loss: Var,
    e: EntropyVars,
    alphas: &Alphas,
) -> Result<Var, TensorError> {
    let mut out = loss;
    for (v, a) in [(e.n, alphas.n), (e.f, alphas.f), (e.f_given_n, alphas.f_given_n), (e.n_given_f, alphas.n_given_f)] {
        if a != 0.0 {
            let s = t.scale(v, T::lit(a));
            out = t.add(out, s)?;
        }
    }
    Ok(out)
}
