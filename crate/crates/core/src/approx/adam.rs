//! Adam over flattened parameter vectors.

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub t: u64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
}

impl Adam {
    pub fn new(lr: f64, n_params: usize) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, t: 0, m: vec![0.0; n_params], v: vec![0.0; n_params] }
    }

    /// Bias-corrected update to subtract from the parameters.
    pub fn step(&mut self, grads: &[f64]) -> Vec<f64> {
        assert_eq!(grads.len(), self.m.len(), "gradient length mismatch");
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let mut update = Vec::with_capacity(grads.len());
        for (i, g) in grads.iter().enumerate() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            update.push(self.lr * m_hat / (v_hat.sqrt() + self.eps));
        }
        update
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_no_update() {
        let mut adam = Adam::new(1e-3, 3);
        let u = adam.step(&[0.0, 0.0, 0.0]);
        assert_eq!(u, vec![0.0; 3]);
    }

    #[test]
    fn first_step_has_lr_magnitude() {
        let mut adam = Adam::new(1e-3, 1);
        let u = adam.step(&[0.5]);
        // First bias-corrected step is lr·g/(|g| + eps) ≈ lr.
        assert!((u[0] - 1e-3).abs() < 1e-8);
    }

    #[test]
    fn descends_a_quadratic() {
        let mut adam = Adam::new(0.1, 1);
        let mut x = 5.0;
        for _ in 0..500 {
            let g = 2.0 * x;
            let u = adam.step(&[g]);
            x -= u[0];
        }
        assert!(x.abs() < 1e-2, "x={x}");
    }
}
