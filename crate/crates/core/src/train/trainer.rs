use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{loss_for_target, tape_loss, tape_reg_loss, Alphas, LossTarget};
use super::optim::{Adam, AdamConfig};
use super::{SpectrumRecord, TrainError};
use crate::fragdag::{rec_frag, FragDag, Lattice};
use crate::gnn::{Model, ModelConfig, MolInputs};
use crate::metrics::{cos_hungarian, MatchTolerance};
use crate::molio::{heavy_skeleton, ElementTable};
use crate::probdist::{dirac_spectrum, latent_from_logits, tape_log_joint, tape_normalized_entropies, LatentState};
use crate::spectrum::Spectrum;
use crate::tensor::{Array, Tape, TensorError, Var};
use crate::Scalar;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub adam: AdamConfig,
    pub batch_size: usize,
    /// Epochs without validation improvement before stopping.
    pub patience: usize,
    pub max_epochs: usize,
    pub alphas: Alphas,
    /// Seed for the per-epoch shuffle.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            adam: AdamConfig::default(),
            batch_size: 16,
            patience: 10,
            max_epochs: 100,
            alphas: Alphas::default(),
            seed: 0,
        }
    }
}

/// A record with everything the model and loss need precomputed.
#[derive(Debug, Clone)]
pub struct Example<T: Scalar> {
    pub id: String,
    pub dag: FragDag,
    pub lattice: Lattice,
    pub inputs: MolInputs<T>,
    pub target: LossTarget,
    pub spectrum: Spectrum,
}

pub fn prepare_example<T: Scalar>(
    record: &SpectrumRecord,
    cfg: &ModelConfig,
    table: &ElementTable,
) -> Result<Example<T>, TrainError> {
    let skel = heavy_skeleton(&record.molecule)?;
    let dag = rec_frag(&skel, cfg.depth)?;
    let lattice = Lattice::new(&dag, cfg.j, cfg.mode, table);
    let inputs = MolInputs::new(&dag, &lattice, &record.energies, cfg, table)?;
    let target = LossTarget::new(&record.spectrum, lattice.masses());
    Ok(Example {
        id: record.molecule.id().to_string(),
        dag,
        lattice,
        inputs,
        target,
        spectrum: record.spectrum.clone(),
    })
}

pub fn prepare_examples<T: Scalar>(
    records: &[SpectrumRecord],
    cfg: &ModelConfig,
    table: &ElementTable,
) -> Result<Vec<Example<T>>, TrainError> {
    records.par_iter().map(|r| prepare_example(r, cfg, table)).collect()
}

/// Loss value and parameter gradients for one example.
#[derive(Debug, Clone)]
pub struct ExampleGrad<T: Scalar> {
    /// OS-aware cross-entropy.
    pub loss: f64,
    /// Loss plus entropy regularization.
    pub objective: f64,
    pub clamped: bool,
    pub grads: Vec<Array<T>>,
}

/// Tape handles of the OS-aware loss and the regularized objective.
#[derive(Debug, Clone, Copy)]
pub struct ObjectiveVars {
    pub loss: Var,
    pub objective: Var,
    pub clamped: bool,
}

/// Records the model forward pass, loss and entropy penalty for `ex` on the
/// tape, with `p` the handles of the model parameters.
pub fn tape_objective<'a, T: Scalar>(
    t: &mut Tape<'a, T>,
    model: &'a Model<T>,
    p: &[Var],
    ex: &'a Example<T>,
    alphas: &Alphas,
) -> Result<ObjectiveVars, TensorError> {
    let out = model.forward(t, p, &ex.inputs)?;
    let joint = tape_log_joint(t, out.logits, out.os_logit, &ex.lattice)?;
    let (loss, clamped) = tape_loss(t, joint, &ex.lattice, &ex.target)?;
    let objective = if alphas.is_zero() {
        loss
    } else {
        let e = tape_normalized_entropies(t, joint.cells, &ex.lattice)?;
        tape_reg_loss(t, loss, e, alphas)?
    };
    Ok(ObjectiveVars { loss, objective, clamped })
}

pub fn example_grad<T: Scalar>(
    model: &Model<T>,
    ex: &Example<T>,
    alphas: &Alphas,
) -> Result<ExampleGrad<T>, TrainError> {
    let mut t = Tape::new();
    let p = model.register(&mut t);
    let ObjectiveVars { loss, objective, clamped } = tape_objective(&mut t, model, &p, ex, alphas)?;
    let loss_v = t.value(loss).data()[0].as_f64();
    let obj_v = t.value(objective).data()[0].as_f64();
    if !obj_v.is_finite() {
        return Err(TrainError::Numerical(format!("non-finite loss {obj_v} on record `{}`", ex.id)));
    }
    let mut g = t.backward(objective)?;
    let params = model.params().arrays();
    let grads =
        p.iter().zip(params).map(|(&v, a)| g.take(v).unwrap_or_else(|| Array::zeros(a.rows(), a.cols()))).collect();
    Ok(ExampleGrad { loss: loss_v, objective: obj_v, clamped, grads })
}

pub fn predict_state<T: Scalar>(model: &Model<T>, ex: &Example<T>) -> Result<LatentState<T>, TrainError> {
    let (logits, os) = model.logits(&ex.inputs)?;
    Ok(latent_from_logits(&logits, os, &ex.lattice)?)
}

/// Held-out statistics, averaged over examples.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EvalSummary {
    pub count: usize,
    pub loss: f64,
    /// Mean minimum attainable loss (entropy of the matched target).
    pub target_entropy: f64,
    pub cos_hun: f64,
    /// Mean |measured P(OS) - predicted P(OS)|.
    pub os_abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExampleEval {
    pub loss: f64,
    pub target_entropy: f64,
    pub cos_hun: f64,
    pub measured_os: f64,
    pub predicted_os: f64,
}

pub fn evaluate_example<T: Scalar>(model: &Model<T>, ex: &Example<T>) -> Result<ExampleEval, TrainError> {
    let state = predict_state(model, ex)?;
    let loss = loss_for_target(&state, &ex.target).value;
    let pred = dirac_spectrum(&state);
    Ok(ExampleEval {
        loss,
        target_entropy: ex.target.entropy(),
        cos_hun: cos_hungarian(&ex.spectrum, &pred, MatchTolerance::PPM_10),
        measured_os: ex.target.p_os,
        predicted_os: state.p_os().as_f64(),
    })
}

pub fn evaluate<T: Scalar>(model: &Model<T>, examples: &[Example<T>]) -> Result<EvalSummary, TrainError> {
    let evals: Vec<ExampleEval> =
        examples.par_iter().map(|ex| evaluate_example(model, ex)).collect::<Result<_, _>>()?;
    let n = evals.len();
    if n == 0 {
        return Ok(EvalSummary::default());
    }
    let mean = |f: &dyn Fn(&ExampleEval) -> f64| evals.iter().map(f).sum::<f64>() / n as f64;
    Ok(EvalSummary {
        count: n,
        loss: mean(&|e| e.loss),
        target_entropy: mean(&|e| e.target_entropy),
        cos_hun: mean(&|e| e.cos_hun),
        os_abs_error: mean(&|e| (e.measured_os - e.predicted_os).abs()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_objective: f64,
    pub val: EvalSummary,
    /// Records whose OS log probability hit the floor this epoch.
    pub clamped: usize,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<T: Scalar> {
    /// Parameters from the epoch with the lowest validation loss.
    pub model: Model<T>,
    pub history: Vec<EpochStats>,
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Mini-batch Adam on the OS-aware loss (plus entropy terms when any alpha
/// is nonzero), early-stopped on validation loss. Training loss is used for
/// model selection when `val` is empty.
pub fn train_model<T: Scalar>(
    mut model: Model<T>,
    train: &[Example<T>],
    val: &[Example<T>],
    cfg: &TrainConfig,
) -> Result<TrainOutcome<T>, TrainError> {
    if train.is_empty() {
        return Err(TrainError::Data("no training examples".into()));
    }
    if cfg.batch_size == 0 {
        return Err(TrainError::Config("batch_size must be at least 1".into()));
    }
    let mut opt = Adam::new(cfg.adam, model.params().arrays());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, 0usize, model.clone());
    let mut since_best = 0;
    let mut stopped_early = false;
    for epoch in 1..=cfg.max_epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut obj_sum, mut clamped) = (0.0, 0.0, 0usize);
        for batch in order.chunks(cfg.batch_size) {
            let results: Vec<ExampleGrad<T>> = batch
                .par_iter()
                .map(|&i| example_grad(&model, &train[i], &cfg.alphas))
                .collect::<Result<_, _>>()
                .map_err(|e| match e {
                    TrainError::Numerical(m) => TrainError::Numerical(format!("epoch {epoch}: {m}")),
                    e => e,
                })?;
            let scale = T::lit(1.0 / batch.len() as f64);
            let mut grads: Vec<Array<T>> =
                model.params().arrays().iter().map(|a| Array::zeros(a.rows(), a.cols())).collect();
            for r in &results {
                loss_sum += r.loss;
                obj_sum += r.objective;
                clamped += r.clamped as usize;
                for (g, rg) in grads.iter_mut().zip(&r.grads) {
                    for (x, &y) in g.data_mut().iter_mut().zip(rg.data()) {
                        *x += y * scale;
                    }
                }
            }
            if grads.iter().any(|g| !g.all_finite()) {
                return Err(TrainError::Numerical(format!("epoch {epoch}: non-finite gradient")));
            }
            opt.step(model.params_mut().arrays_mut(), &grads);
        }
        if !model.params().all_finite() {
            return Err(TrainError::Numerical(format!("epoch {epoch}: parameters diverged")));
        }
        let n = train.len() as f64;
        let val_summary = evaluate(&model, val)?;
        let score = if val.is_empty() { loss_sum / n } else { val_summary.loss };
        if !score.is_finite() {
            return Err(TrainError::Numerical(format!("epoch {epoch}: non-finite validation loss")));
        }
        log::info!(
            "epoch={epoch} train_loss={:.5} val_loss={:.5} val_cos_hun={:.4} val_entropy={:.5}",
            loss_sum / n,
            val_summary.loss,
            val_summary.cos_hun,
            val_summary.target_entropy
        );
        history.push(EpochStats {
            epoch,
            train_loss: loss_sum / n,
            train_objective: obj_sum / n,
            val: val_summary,
            clamped,
        });
        if score < best.0 {
            best = (score, epoch, model.clone());
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }
    Ok(TrainOutcome { model: best.2, history, best_epoch: best.1, stopped_early })
}
