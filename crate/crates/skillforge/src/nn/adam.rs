//! Adam with bias correction over flat parameter vectors.

use serde::{Deserialize, Serialize};

use super::NnError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AdamState {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub step: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl AdamState {
    pub fn new(n_params: usize, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
        }
    }

    /// One Adam step in place. Non-finite gradients are rejected before any
    /// state changes.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::Shape {
                what: "adam parameter/gradient length".into(),
                want: self.m.len(),
                got: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        if let Some(idx) = grads.iter().position(|g| !g.is_finite()) {
            return Err(NnError::NonFiniteGradient { index: idx });
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradients_leave_params_unchanged() {
        let mut state = AdamState::new(3, 1e-3);
        state.m = vec![0.5, -0.5, 0.1];
        state.v = vec![0.2, 0.2, 0.2];
        let mut params = vec![1.0, 2.0, 3.0];
        let before_m = state.m.clone();
        // With m already nonzero a zero gradient still moves params, so
        // start from pristine state for the no-op claim.
        let mut fresh = AdamState::new(3, 1e-3);
        let mut p2 = vec![1.0, 2.0, 3.0];
        fresh.step(&mut p2, &[0.0, 0.0, 0.0]).unwrap();
        assert_eq!(p2, vec![1.0, 2.0, 3.0]);
        // Moments decay toward zero on repeated zero gradients.
        state.step(&mut params, &[0.0, 0.0, 0.0]).unwrap();
        for (m_new, m_old) in state.m.iter().zip(&before_m) {
            assert!(m_new.abs() < m_old.abs());
        }
    }

    #[test]
    fn first_step_moves_against_gradient_sign() {
        let mut state = AdamState::new(2, 1e-2);
        let mut params = vec![0.0, 0.0];
        state.step(&mut params, &[3.0, -0.25]).unwrap();
        assert!(params[0] < 0.0);
        assert!(params[1] > 0.0);
    }

    #[test]
    fn deterministic_given_identical_state() {
        let run = || {
            let mut state = AdamState::new(2, 3e-4);
            let mut params = vec![0.3, -0.7];
            for i in 0..10 {
                let g = [0.1 * i as f64, -0.05];
                state.step(&mut params, &g).unwrap();
            }
            params
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_rejected_without_update() {
        let mut state = AdamState::new(2, 1e-3);
        let mut params = vec![1.0, 1.0];
        let err = state.step(&mut params, &[0.1, f64::NAN]).unwrap_err();
        assert!(matches!(err, NnError::NonFiniteGradient { index: 1 }));
        assert_eq!(params, vec![1.0, 1.0]);
        assert_eq!(state.step, 0);
    }

    #[test]
    fn step_counter_increments() {
        let mut state = AdamState::new(1, 1e-3);
        let mut params = vec![0.0];
        state.step(&mut params, &[1.0]).unwrap();
        state.step(&mut params, &[1.0]).unwrap();
        assert_eq!(state.step, 2);
    }
}
