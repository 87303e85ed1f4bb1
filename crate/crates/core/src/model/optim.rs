use serde::{Deserialize, Serialize};

use crate::config::OptimConfig;
use crate::numerics::Scalar;
use crate::params::ParamSet;

/// Learning rate at 1-based `step`: linear warmup to the peak, then
/// inverse-square-root decay.
pub fn learning_rate(cfg: &OptimConfig, step: u64) -> f64 {
    let step = step.max(1) as f64;
    if cfg.warmup_steps == 0 {
        return cfg.peak_lr;
    }
    let warmup = cfg.warmup_steps as f64;
    cfg.peak_lr * (step / warmup).min((warmup / step).sqrt())
}

/// Adam moments over the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamState<T> {
    pub step: u64,
    pub m: Vec<T>,
    pub v: Vec<T>,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(num_params: usize) -> Self {
        AdamState { step: 0, m: vec![T::zero(); num_params], v: vec![T::zero(); num_params] }
    }

    /// One update of `params` against `grads`; returns the learning rate used.
    pub fn update<P: ParamSet<T>>(&mut self, cfg: &OptimConfig, params: &mut P, grads: &P) -> f64 {
        self.step += 1;
        let lr = learning_rate(cfg, self.step);
        let mut g = grads.flatten();
        if cfg.clip_norm > 0.0 {
            let norm = g.iter().map(|&x| x * x).fold(T::zero(), |a, b| a + b).sqrt();
            let clip = T::lit(cfg.clip_norm);
            if norm > clip {
                let s = clip / norm;
                g.iter_mut().for_each(|x| *x *= s);
            }
        }
        let (b1, b2) = (T::lit(cfg.beta1), T::lit(cfg.beta2));
        let c1 = T::one() - T::lit(cfg.beta1.powi(self.step.min(i32::MAX as u64) as i32));
        let c2 = T::one() - T::lit(cfg.beta2.powi(self.step.min(i32::MAX as u64) as i32));
        let (lr_t, eps) = (T::lit(lr), T::lit(cfg.eps));
        let mut p = params.flatten();
        for i in 0..p.len() {
            self.m[i] = b1 * self.m[i] + (T::one() - b1) * g[i];
            self.v[i] = b2 * self.v[i] + (T::one() - b2) * g[i] * g[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            p[i] -= lr_t * m_hat / (v_hat.sqrt() + eps);
        }
        params.assign_flat(&p);
        lr
    }
}
