//! Bias-corrected Adam over a flat list of parameter tensors.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first_moment: Vec<Vec<f64>>,
    second_moment: Vec<Vec<f64>>,
}

impl Adam {
    pub fn new(params: &[Tensor], lr: f64, beta1: f64, beta2: f64, epsilon: f64) -> Adam {
        Adam {
            lr,
            beta1,
            beta2,
            epsilon,
            step: 0,
            first_moment: params.iter().map(|p| vec![0.0; p.len()]).collect(),
            second_moment: params.iter().map(|p| vec![0.0; p.len()]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One update over all parameters. Gradients are left untouched;
    /// the caller zeroes them between steps.
    pub fn step(&mut self, params: &[Tensor]) -> Result<()> {
        assert_eq!(params.len(), self.first_moment.len(), "parameter list changed size");
        // Validate up front so a missing grad cannot half-apply an update.
        let grads: Vec<Vec<f64>> = params
            .iter()
            .enumerate()
            .map(|(i, p)| p.grad().ok_or(Error::MissingGrad { index: i }))
            .collect::<Result<_>>()?;

        self.step += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step as i32);

        for (i, param) in params.iter().enumerate() {
            let g = &grads[i];
            let m = &mut self.first_moment[i];
            let v = &mut self.second_moment[i];
            param.update_data(|data| {
                for j in 0..data.len() {
                    m[j] = self.beta1 * m[j] + (1.0 - self.beta1) * g[j];
                    v[j] = self.beta2 * v[j] + (1.0 - self.beta2) * g[j] * g[j];
                    let m_hat = m[j] / bc1;
                    let v_hat = v[j] / bc2;
                    data[j] -= self.lr * m_hat / (v_hat.sqrt() + self.epsilon);
                }
            });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn param(v: f64) -> Tensor {
        Tensor::param(1, 1, vec![v]).unwrap()
    }

    #[test]
    fn first_step_hand_computed() {
        // m_hat = 1, v_hat = 1 after bias correction, so p moves by ~lr.
        let p = param(1.0);
        let root = p.sum();
        root.backward().unwrap();
        let mut adam = Adam::new(std::slice::from_ref(&p), 0.1, 0.5, 0.999, 1e-8);
        adam.step(std::slice::from_ref(&p)).unwrap();
        assert!((p.value()[0] - 0.9).abs() < 1e-7);
        assert_eq!(adam.step_count(), 1);
        // grads untouched
        assert_eq!(p.grad().unwrap(), vec![1.0]);
    }

    #[test]
    fn zero_gradient_leaves_params_unchanged() {
        let p = param(2.5);
        let root = p.scalar_mul(0.0).sum();
        root.backward().unwrap();
        assert_eq!(p.grad().unwrap(), vec![0.0]);
        let mut adam = Adam::new(std::slice::from_ref(&p), 0.1, 0.5, 0.999, 1e-8);
        adam.step(std::slice::from_ref(&p)).unwrap();
        assert_eq!(p.value(), vec![2.5]);
    }

    #[test]
    fn constant_gradient_decreases_monotonically() {
        let p = param(1.0);
        let mut adam = Adam::new(std::slice::from_ref(&p), 0.1, 0.5, 0.999, 1e-8);
        let mut prev = p.value()[0];
        for _ in 0..2 {
            p.zero_grad();
            let root = p.sum();
            root.backward().unwrap();
            adam.step(std::slice::from_ref(&p)).unwrap();
            let cur = p.value()[0];
            assert!(cur < prev);
            prev = cur;
        }
    }

    #[test]
    fn missing_grad_rejected() {
        let p = param(1.0);
        let mut adam = Adam::new(std::slice::from_ref(&p), 0.1, 0.5, 0.999, 1e-8);
        assert!(matches!(
            adam.step(std::slice::from_ref(&p)),
            Err(crate::error::Error::MissingGrad { index: 0 })
        ));
        assert_eq!(adam.step_count(), 0);
    }
}
