//! Adam with bias correction.

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: u64,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl AdamState {
    /// Zero moments for `len` parameters with the usual defaults
    /// (β₁ = 0.9, β₂ = 0.999, ε = 1e-8).
    pub fn new(len: usize, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::contract(format!(
                "adam state tracks {} parameters, got {} params and {} grads",
                self.m.len(),
                params.len(),
                grads.len()
            )));
        }
        self.t += 1;
        let (b1, b2) = (self.beta1, self.beta2);
        let c1 = 1.0 - b1.powi(self.t as i32);
        let c2 = 1.0 - b2.powi(self.t as i32);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            // Moments of parameters that stop receiving gradient would decay
            // into subnormals and stick there; flush them to zero instead.
            *m = flush(b1 * *m + (1.0 - b1) * g);
            *v = flush(b2 * *v + (1.0 - b2) * g * g);
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

fn flush(x: f64) -> f64 {
    if x.abs() < f64::MIN_POSITIVE {
        0.0
    } else {
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decayed_moments_flush_to_zero() {
        let mut adam = AdamState::new(1, 0.001);
        let mut p = [0.0];
        adam.step(&mut p, &[1.0]).unwrap();
        for _ in 0..8000 {
            adam.step(&mut p, &[0.0]).unwrap();
        }
        assert_eq!(adam.first_moment()[0], 0.0);
        assert!(adam.second_moment()[0] > 0.0);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut adam = AdamState::new(1, 0.001);
        let mut p = [0.0];
        adam.step(&mut p, &[1.0]).unwrap();
        // m̂ = 1, v̂ = 1, so the step is lr / (1 + ε).
        assert!((p[0] + 0.001 / (1.0 + 1e-8)).abs() < 1e-18);
        assert!((p[0] + 0.000999999990).abs() < 1e-15);
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut adam = AdamState::new(3, 0.01);
        let mut p = [1.0, -2.0, 0.5];
        adam.step(&mut p, &[0.0; 3]).unwrap();
        assert_eq!(p, [1.0, -2.0, 0.5]);
    }

    #[test]
    fn constant_gradient_steps_stay_near_lr() {
        let lr = 0.001;
        let mut adam = AdamState::new(1, lr);
        let mut p = [0.0];
        let mut prev = 0.0;
        for _ in 0..2 {
            adam.step(&mut p, &[0.7]).unwrap();
            let delta = (p[0] - prev).abs();
            assert!(delta >= 0.9 * lr && delta <= lr, "step {delta}");
            prev = p[0];
        }
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut adam = AdamState::new(2, 0.01);
        assert!(adam.step(&mut [0.0; 3], &[0.0; 3]).is_err());
    }
}
