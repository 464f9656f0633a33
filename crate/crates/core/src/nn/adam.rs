use crate::error::{Error, Result};
use crate::nn::params::ParameterStore;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 1e-4,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Adam with bias correction. Moment buffers persist across steps.
#[derive(Debug, Clone)]
pub struct Adam {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(config: AdamConfig, store: &ParameterStore) -> Self {
        let zeros = || store.iter().map(|p| vec![0.0; p.len()]).collect();
        Self {
            config,
            step: 0,
            m: zeros(),
            v: zeros(),
        }
    }

    pub fn steps_taken(&self) -> u64 {
        self.step
    }

    /// Applies one update from the accumulated gradients, then zeroes them.
    /// Nothing is modified when any gradient is non-finite.
    pub fn step(&mut self, store: &mut ParameterStore) -> Result<()> {
        if let Some(p) = store.iter().find(|p| p.grad.iter().any(|g| !g.is_finite())) {
            return Err(Error::Training(format!(
                "non-finite gradient in {}",
                p.name
            )));
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let t = self.step as i32;
        let bc1 = 1.0 - beta1.powi(t);
        let bc2 = 1.0 - beta2.powi(t);
        for (k, p) in store.iter_mut().enumerate() {
            let (m, v) = (&mut self.m[k], &mut self.v[k]);
            for j in 0..p.values.len() {
                let g = p.grad[j];
                m[j] = beta1 * m[j] + (1.0 - beta1) * g;
                v[j] = beta2 * v[j] + (1.0 - beta2) * g * g;
                let m_hat = m[j] / bc1;
                let v_hat = v[j] / bc2;
                p.values[j] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
            p.grad.fill(0.0);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::params::{Init, ParamId, ParamSpec};

    fn one(v: f64) -> ParameterStore {
        let mut s = ParameterStore::init(&[ParamSpec::new("x", 1, 1, Init::Zeros)], 0).unwrap();
        s.get_mut(ParamId(0)).values[0] = v;
        s
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut s = ParameterStore::init(&[ParamSpec::new("w", 3, 2, Init::Glorot)], 4).unwrap();
        let before = s.clone();
        let mut adam = Adam::new(AdamConfig::default(), &s);
        adam.step(&mut s).unwrap();
        assert_eq!(s, before);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut s = one(0.0);
        let cfg = AdamConfig {
            lr: 0.1,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg, &s);
        s.get_mut(ParamId(0)).grad[0] = 1.0;
        adam.step(&mut s).unwrap();
        // m_hat = 1, v_hat = 1 -> -0.1 / (1 + 1e-8)
        assert!((s.get(ParamId(0)).values[0] + 0.1 / (1.0 + 1e-8)).abs() < 1e-15);
        assert_eq!(s.get(ParamId(0)).grad[0], 0.0);
    }

    #[test]
    fn two_step_trace() {
        let mut s = one(1.0);
        let cfg = AdamConfig {
            lr: 0.01,
            ..AdamConfig::default()
        };
        let mut adam = Adam::new(cfg, &s);
        s.get_mut(ParamId(0)).grad[0] = 2.0;
        adam.step(&mut s).unwrap();
        s.get_mut(ParamId(0)).grad[0] = -1.0;
        adam.step(&mut s).unwrap();

        // step 1: m = 0.2, v = 0.004; m_hat = 2, v_hat = 4 -> x = 1 - 0.01 * 2 / (2 + 1e-8)
        let x1 = 1.0 - 0.01 * 2.0 / (2.0 + 1e-8);
        // step 2: m = 0.18 - 0.1 = 0.08, v = 0.003996 + 0.001 = 0.004996
        let m2 = 0.9 * 0.2 + 0.1 * -1.0;
        let v2: f64 = 0.999 * 0.004 + 0.001 * 1.0;
        let m_hat = m2 / (1.0 - 0.81);
        let v_hat = v2 / (1.0 - 0.998001);
        let x2 = x1 - 0.01 * m_hat / (v_hat.sqrt() + 1e-8);
        assert!((s.get(ParamId(0)).values[0] - x2).abs() < 1e-12);
    }

    #[test]
    fn non_finite_gradient_is_named() {
        let mut s = one(0.0);
        let mut adam = Adam::new(AdamConfig::default(), &s);
        s.get_mut(ParamId(0)).grad[0] = f64::NAN;
        let err = adam.step(&mut s).unwrap_err();
        assert!(err.to_string().contains('x'));
        assert_eq!(adam.steps_taken(), 0);
    }
}
