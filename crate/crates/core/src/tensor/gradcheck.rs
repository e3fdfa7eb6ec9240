use super::{Array, Tape, TensorError, Var};
use crate::Scalar;

/// Largest parameter count [`grad_check`] accepts.
pub const GRAD_CHECK_MAX_PARAMS: usize = 5_000;

#[derive(Debug, Clone, PartialEq)]
pub struct GradEntry {
    pub param: usize,
    pub element: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub entries: Vec<GradEntry>,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn max_rel_error(&self) -> f64 {
        self.entries.iter().map(|e| e.rel_error).fold(0.0, f64::max)
    }

    pub fn failures(&self) -> impl Iterator<Item = &GradEntry> {
        self.entries.iter().filter(move |e| e.rel_error.is_nan() || e.rel_error >= self.tolerance)
    }

    pub fn passed(&self) -> bool {
        self.failures().next().is_none()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// `|a - n| / max(|a| + |n|, 1e-8)`. The floor sits above round-off in
/// structurally zero gradients and below any central-difference signal.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-8)
}

/// Compares reverse-mode gradients of `loss_fn` against central finite
/// differences with step `step` for every element of every parameter.
/// Parameters are copied onto each tape, so `loss_fn` may borrow data that
/// lives for `'a`.
pub fn grad_check<'a, T, F>(
    loss_fn: F,
    params: &[Array<T>],
    step: f64,
    tolerance: f64,
) -> Result<GradCheckReport, TensorError>
where
    T: Scalar,
    F: Fn(&mut Tape<'a, T>, &[Var]) -> Result<Var, TensorError>,
{
    let total: usize = params.iter().map(|p| p.len()).sum();
    if total > GRAD_CHECK_MAX_PARAMS {
        return Err(TensorError::TooManyParams { count: total, limit: GRAD_CHECK_MAX_PARAMS });
    }
    let eval = |ps: &[Array<T>]| -> Result<f64, TensorError> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = ps.iter().map(|p| tape.param_owned(p.clone())).collect();
        let loss = loss_fn(&mut tape, &vars)?;
        tape.value(loss)
            .item()
            .map(|v| v.as_f64())
            .ok_or(TensorError::NonScalarLoss { rows: tape.value(loss).rows(), cols: tape.value(loss).cols() })
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = params.iter().map(|p| tape.param_owned(p.clone())).collect();
    let loss = loss_fn(&mut tape, &vars)?;
    let grads = tape.backward(loss)?;

    let mut work: Vec<Array<T>> = params.to_vec();
    let mut entries = Vec::with_capacity(total);
    for (pi, p) in params.iter().enumerate() {
        let analytic = grads.get_or_zeros(vars[pi], p);
        for e in 0..p.len() {
            let orig = p.data()[e];
            work[pi].data_mut()[e] = orig + T::lit(step);
            let up = eval(&work)?;
            work[pi].data_mut()[e] = orig - T::lit(step);
            let down = eval(&work)?;
            work[pi].data_mut()[e] = orig;
            let numeric = (up - down) / (2.0 * step);
            let a = analytic.data()[e].as_f64();
            entries.push(GradEntry {
                param: pi,
                element: e,
                analytic: a,
                numeric,
                rel_error: relative_error(a, numeric),
            });
        }
    }
    Ok(GradCheckReport { entries, tolerance })
}
