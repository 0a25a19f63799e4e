//! Adam with decoupled weight decay, and an exponential moving average of
//! parameters.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
}

impl AdamConfig {
    pub fn new(lr: f64, beta1: f64, beta2: f64) -> Self {
        Self {
            lr,
            beta1,
            beta2,
            eps: 1e-8,
            weight_decay: 0.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(cfg: AdamConfig, n: usize) -> Self {
        Self {
            cfg,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape("optimizer state does not match parameters".into()));
        }
        if grads.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("gradient".into()));
        }
        self.t += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
            weight_decay,
        } = self.cfg;
        let c1 = 1.0 - beta1.powi(self.t);
        let c2 = 1.0 - beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grads[i];
            self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grads[i] * grads[i];
            let mh = self.m[i] / c1;
            let vh = self.v[i] / c2;
            params[i] -= lr * (mh / (vh.sqrt() + eps) + weight_decay * params[i]);
        }
        Ok(())
    }
}

/// `shadow <- decay * shadow + (1 - decay) * params`, starting from the
/// initial parameters.
#[derive(Debug, Clone)]
pub struct Ema {
    decay: f64,
    shadow: Vec<f64>,
}

impl Ema {
    pub fn new(decay: f64, init: &[f64]) -> Self {
        Self {
            decay,
            shadow: init.to_vec(),
        }
    }

    pub fn update(&mut self, params: &[f64]) {
        for (s, p) in self.shadow.iter_mut().zip(params) {
            *s = self.decay * *s + (1.0 - self.decay) * p;
        }
    }

    pub fn shadow(&self) -> &[f64] {
        &self.shadow
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_with_zero_beta1_is_sign_descent() {
        let mut adam = Adam::new(AdamConfig::new(0.1, 0.0, 0.99), 3);
        let mut p = vec![1.0, 1.0, 1.0];
        adam.step(&mut p, &[2.0, -0.5, 0.0]).unwrap();
        assert!((p[0] - 0.9).abs() < 1e-6);
        assert!((p[1] - 1.1).abs() < 1e-6);
        assert_eq!(p[2], 1.0);
    }

    #[test]
    fn converges_on_quadratic() {
        let mut adam = Adam::new(AdamConfig::new(0.05, 0.0, 0.99), 2);
        let mut p = vec![3.0, -2.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 1.0), 2.0 * (p[1] + 0.5)];
            adam.step(&mut p, &g).unwrap();
        }
        assert!((p[0] - 1.0).abs() < 0.05 && (p[1] + 0.5).abs() < 0.05, "{p:?}");
    }

    #[test]
    fn decoupled_weight_decay() {
        let cfg = AdamConfig { weight_decay: 0.5, ..AdamConfig::new(0.1, 0.0, 0.99) };
        let mut adam = Adam::new(cfg, 1);
        let mut p = vec![2.0];
        adam.step(&mut p, &[0.0]).unwrap();
        assert!((p[0] - (2.0 - 0.1 * 0.5 * 2.0)).abs() < 1e-15);
        assert!(adam.step(&mut p, &[f64::NAN]).is_err());
    }

    #[test]
    fn ema_matches_closed_form() {
        let traj = [[1.0, -2.0], [0.5, 0.0], [3.0, 1.0], [-1.0, 4.0]];
        let init = [0.2, 0.3];
        let d: f64 = 0.9;
        let mut ema = Ema::new(d, &init);
        for p in &traj {
            ema.update(p);
        }
        let t = traj.len() as i32;
        for j in 0..2 {
            let mut expect = d.powi(t) * init[j];
            for (k, p) in traj.iter().enumerate() {
                expect += (1.0 - d) * d.powi(t - 1 - k as i32) * p[j];
            }
            assert!((ema.shadow()[j] - expect).abs() < 1e-14);
        }
    }
}
