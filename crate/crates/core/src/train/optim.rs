use serde::{Deserialize, Serialize};

use crate::tensor::Array;
use crate::Scalar;

/// Adaptive moment estimation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { lr: 1e-3, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }
}

/// Adam with bias-corrected first and second moments.
#[derive(Debug, Clone)]
pub struct Adam<T: Scalar> {
    cfg: AdamConfig,
    m: Vec<Array<T>>,
    v: Vec<Array<T>>,
    step: i32,
}

impl<T: Scalar> Adam<T> {
    pub fn new(cfg: AdamConfig, params: &[Array<T>]) -> Self {
        let zeros = || params.iter().map(|p| Array::zeros(p.rows(), p.cols())).collect();
        Adam { cfg, m: zeros(), v: zeros(), step: 0 }
    }

    pub fn steps(&self) -> i32 {
        self.step
    }

    pub fn step(&mut self, params: &mut [Array<T>], grads: &[Array<T>]) {
        self.step += 1;
        let (b1, b2) = (T::lit(self.cfg.beta1), T::lit(self.cfg.beta2));
        let c1 = T::one() - b1.powi(self.step);
        let c2 = T::one() - b2.powi(self.step);
        let (lr, eps) = (T::lit(self.cfg.lr), T::lit(self.cfg.eps));
        for ((p, g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            let (p, m, v) = (p.data_mut(), m.data_mut(), v.data_mut());
            for (k, &gk) in g.data().iter().enumerate() {
                m[k] = b1 * m[k] + (T::one() - b1) * gk;
                v[k] = b2 * v[k] + (T::one() - b2) * gk * gk;
                let mh = m[k] / c1;
                let vh = v[k] / c2;
                p[k] -= lr * mh / (vh.sqrt() + eps);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = vec![Array::row_vector(vec![1.0f64, -2.0])];
        let g = vec![Array::row_vector(vec![0.5, -3.0])];
        let mut opt = Adam::new(AdamConfig::default(), &p);
        opt.step(&mut p, &g);
        assert!((p[0].data()[0] - (1.0 - 1e-3)).abs() < 1e-9);
        assert!((p[0].data()[1] - (-2.0 + 1e-3)).abs() < 1e-9);
    }

    #[test]
    fn zero_lr_is_identity() {
        let mut p = vec![Array::row_vector(vec![1.0f64, -2.0])];
        let before = p.clone();
        let mut opt = Adam::new(AdamConfig { lr: 0.0, ..Default::default() }, &p);
        opt.step(&mut p, &[Array::row_vector(vec![0.5, 1.0])]);
        assert_eq!(p, before);
    }
}
