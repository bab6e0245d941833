use crate::numcore::params::{ParamId, ParameterStore};

#[derive(Debug, Clone, Copy, PartialEq)]
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

/// One bias-corrected Adam update of the listed parameters from their
/// current gradients. Gradients are left in place.
pub fn adam_step(store: &mut ParameterStore, ids: &[ParamId], cfg: &AdamConfig) {
    for &id in ids {
        let (value, grad, m, v, steps) = store.moments_mut(id);
        *steps += 1;
        let t = *steps as i32;
        let c1 = 1.0 - cfg.beta1.powi(t);
        let c2 = 1.0 - cfg.beta2.powi(t);
        let it = value
            .data_mut()
            .iter_mut()
            .zip(grad.data())
            .zip(m.data_mut().iter_mut().zip(v.data_mut().iter_mut()));
        for ((x, &g), (mi, vi)) in it {
            *mi = cfg.beta1 * *mi + (1.0 - cfg.beta1) * g;
            *vi = cfg.beta2 * *vi + (1.0 - cfg.beta2) * g * g;
            let mhat = *mi / c1;
            let vhat = *vi / c2;
            *x -= cfg.lr * mhat / (vhat.sqrt() + cfg.eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::tensor::Tensor;

    #[test]
    fn first_step_moves_by_lr_against_gradient_sign() {
        let mut store = ParameterStore::new();
        let id = store.add("x", Tensor::row_vector(vec![1.0, -1.0, 0.5])).unwrap();
        store.grad_mut(id).data_mut().copy_from_slice(&[3.0, -0.2, 0.0]);
        adam_step(&mut store, &[id], &AdamConfig { lr: 0.1, ..Default::default() });
        let x = store.value(id).data();
        assert!((x[0] - 0.9).abs() < 1e-6);
        assert!((x[1] + 0.9).abs() < 1e-6);
        assert_eq!(x[2], 0.5);
    }

    #[test]
    fn converges_on_quadratic() {
        let mut store = ParameterStore::new();
        let id = store.add("x", Tensor::row_vector(vec![4.0, -3.0])).unwrap();
        let cfg = AdamConfig { lr: 0.05, ..Default::default() };
        for _ in 0..2000 {
            let g = store.value(id).map(|v| 2.0 * v);
            *store.grad_mut(id) = g;
            adam_step(&mut store, &[id], &cfg);
        }
        assert!(store.value(id).sum_sq() < 1e-4);
    }
}
