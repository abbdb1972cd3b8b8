use serde::{Deserialize, Serialize};

use super::{ParamStore, Scalar};

/// Bias-corrected Adam.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for Adam {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl Adam {
    pub fn with_lr(lr: f64) -> Self {
        Self {
            lr,
            ..Self::default()
        }
    }

    /// Applies one update to every parameter and zeroes the gradients.
    pub fn step<T: Scalar>(&self, params: &mut ParamStore<T>) {
        let b1 = T::from_f64(self.beta1);
        let b2 = T::from_f64(self.beta2);
        let one_minus_b1 = T::from_f64(1.0 - self.beta1);
        let one_minus_b2 = T::from_f64(1.0 - self.beta2);
        let eps = T::from_f64(self.epsilon);
        for p in params.iter_mut() {
            p.step += 1;
            let t = p.step as i32;
            let c1 = T::from_f64(1.0 / (1.0 - self.beta1.powi(t)));
            let c2 = T::from_f64(1.0 / (1.0 - self.beta2.powi(t)));
            let lr = T::from_f64(self.lr);
            let values = p.value.data_mut();
            let grads = p.grad.data_mut();
            let m = p.first_moment.data_mut();
            let v = p.second_moment.data_mut();
            for i in 0..values.len() {
                let g = grads[i];
                m[i] = b1 * m[i] + one_minus_b1 * g;
                v[i] = b2 * v[i] + one_minus_b2 * g * g;
                let m_hat = m[i] * c1;
                let v_hat = v[i] * c2;
                values[i] -= lr * m_hat / (v_hat.sqrt() + eps);
                grads[i] = T::ZERO;
            }
        }
    }
}
