//! Adam and the plateau learning-rate schedule.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::net::{GradientBundle, Model};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if !((0.0..1.0).contains(&self.beta1) && (0.0..1.0).contains(&self.beta2)) {
            return Err(Error::Config("Adam betas must lie in [0, 1)".into()));
        }
        if self.eps.is_nan() || self.eps <= 0.0 {
            return Err(Error::Config("Adam eps must be positive".into()));
        }
        Ok(())
    }
}

/// Moment estimates for a list of parameter slices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl AdamState {
    /// `shapes` are the lengths of the parameter slices, in update order.
    pub fn new(config: AdamConfig, shapes: &[usize]) -> Self {
        AdamState {
            config,
            t: 0,
            m: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            v: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn for_model(config: AdamConfig, model: &mut Model) -> Self {
        let shapes: Vec<usize> = model.param_slices_mut().iter().map(|s| s.len()).collect();
        AdamState::new(config, &shapes)
    }

    /// One bias-corrected Adam update at learning rate `lr`.
    ///
    /// Non-finite gradients leave the parameters untouched and are reported as
    /// divergence.
    pub fn step(&mut self, params: &mut [&mut [f64]], grads: &[&[f64]], lr: f64) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Dimension(format!(
                "optimizer tracks {} slices, got {} parameters and {} gradients",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, (p, g)) in params.iter().zip(grads).enumerate() {
            if p.len() != self.m[i].len() || g.len() != self.m[i].len() {
                return Err(Error::Dimension(format!("slice {i} changed shape")));
            }
        }
        if grads.iter().any(|g| g.iter().any(|v| !v.is_finite())) {
            return Err(Error::Divergence("non-finite gradient".into()));
        }
        self.t += 1;
        let AdamConfig { beta1, beta2, eps, .. } = self.config;
        let c1 = 1.0 - beta1.powi(self.t as i32);
        let c2 = 1.0 - beta2.powi(self.t as i32);
        for (i, (p, g)) in params.iter_mut().zip(grads).enumerate() {
            let (m, v) = (&mut self.m[i], &mut self.v[i]);
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }

    /// Applies `grads` to every trainable of `model`, theta vectors included.
    pub fn step_model(&mut self, model: &mut Model, grads: &GradientBundle, lr: f64) -> Result<()> {
        let grad_slices: Vec<Vec<f64>> = model.grad_slices(grads).iter().map(|s| s.to_vec()).collect();
        let grad_refs: Vec<&[f64]> = grad_slices.iter().map(Vec::as_slice).collect();
        let mut params = model.param_slices_mut();
        self.step(&mut params, &grad_refs, lr)
    }
}

/// Multiplies the learning rate by `decay` after `patience` epochs without a
/// new best loss; training stops once the rate falls below `floor`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LrSchedule {
    pub initial: f64,
    pub decay: f64,
    pub floor: f64,
    pub patience: usize,
}

impl Default for LrSchedule {
    fn default() -> Self {
        LrSchedule {
            initial: 1e-3,
            decay: 0.5,
            floor: 1e-7,
            patience: 5,
        }
    }
}

impl LrSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.initial > 0.0 && self.initial.is_finite()) {
            return Err(Error::Config("initial learning rate must be positive".into()));
        }
        if !(self.decay > 0.0 && self.decay < 1.0) {
            return Err(Error::Config("lr decay must lie in (0, 1)".into()));
        }
        if self.floor.is_nan() || self.floor <= 0.0 {
            return Err(Error::Config("lr floor must be positive".into()));
        }
        if self.patience == 0 {
            return Err(Error::Config("lr patience must be at least 1".into()));
        }
        Ok(())
    }

    /// Learning rate for the next epoch given every epoch loss so far, and
    /// whether training should stop.
    ///
    /// The result is a pure function of the history: an entry improves on the
    /// best so far only if strictly lower, and each run of `patience`
    /// non-improving epochs applies one decay.
    pub fn step(&self, history: &[f64]) -> (f64, bool) {
        let mut lr = self.initial;
        let mut best = f64::INFINITY;
        let mut stale = 0;
        for &loss in history {
            if loss < best {
                best = loss;
                stale = 0;
            } else {
                stale += 1;
                if stale >= self.patience {
                    lr *= self.decay;
                    stale = 0;
                }
            }
        }
        (lr, lr < self.floor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scalar_run(grad: impl Fn(f64) -> f64, w0: f64, lr: f64, steps: usize) -> f64 {
        let mut w = [w0];
        let mut state = AdamState::new(AdamConfig { lr, ..Default::default() }, &[1]);
        for _ in 0..steps {
            let g = [grad(w[0])];
            state.step(&mut [&mut w[..]], &[&g[..]], lr).unwrap();
        }
        w[0]
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut p = vec![1.5, -2.0, 0.25];
        let before = p.clone();
        let mut state = AdamState::new(AdamConfig::default(), &[3]);
        for _ in 0..10 {
            state.step(&mut [&mut p[..]], &[&[0.0, 0.0, 0.0][..]], 1e-2).unwrap();
        }
        assert_eq!(p, before);
        assert_eq!(state.t, 10);
    }

    #[test]
    fn constant_gradient_descends() {
        assert!(scalar_run(|_| 2.0, 0.0, 1e-2, 50) < 0.0);
        assert!(scalar_run(|_| -0.5, 0.0, 1e-2, 50) > 0.0);
    }

    #[test]
    fn quadratic_bowl() {
        let w = scalar_run(|w| 2.0 * (w - 3.0), 0.0, 0.1, 500);
        assert!((w - 3.0).abs() <= 1e-3, "w = {w}");
    }

    #[test]
    fn non_finite_gradient_is_divergence() {
        let mut p = vec![1.0];
        let mut state = AdamState::new(AdamConfig::default(), &[1]);
        let err = state.step(&mut [&mut p[..]], &[&[f64::NAN][..]], 1e-3).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)));
        assert_eq!(p, vec![1.0]);
        assert_eq!(state.t, 0);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut p = [1.0, 2.0];
        let mut state = AdamState::new(AdamConfig::default(), &[1]);
        assert!(state.step(&mut [&mut p[..]], &[&[0.0, 0.0][..]], 1e-3).is_err());
    }

    #[test]
    fn schedule_improving_history_keeps_lr() {
        let s = LrSchedule::default();
        let (lr, stop) = s.step(&[5.0, 4.0, 3.0, 2.0, 1.0, 0.5, 0.25, 0.1]);
        assert_eq!(lr, s.initial);
        assert!(!stop);
    }

    #[test]
    fn schedule_flat_history_decays_once() {
        let s = LrSchedule::default();
        let flat = vec![1.0; s.patience + 1];
        assert_eq!(s.step(&flat), (s.initial * s.decay, false));
        assert_eq!(s.step(&flat[..s.patience]).0, s.initial);
    }

    #[test]
    fn schedule_eventually_stops() {
        let s = LrSchedule::default();
        let mut history = vec![1.0];
        let mut prev = s.initial;
        loop {
            let (lr, stop) = s.step(&history);
            assert!(lr <= prev);
            prev = lr;
            if stop {
                break;
            }
            history.push(1.0);
            assert!(history.len() < 10_000);
        }
        // 1e-3 * 0.5^k < 1e-7 first at k = 14
        assert_eq!(history.len(), 1 + 14 * s.patience);
        assert!(prev < s.floor);
    }

    #[test]
    fn schedule_validation() {
        assert!(LrSchedule::default().validate().is_ok());
        assert!(LrSchedule { decay: 1.0, ..Default::default() }.validate().is_err());
        assert!(LrSchedule { floor: 0.0, ..Default::default() }.validate().is_err());
        assert!(LrSchedule { patience: 0, ..Default::default() }.validate().is_err());
    }
}
