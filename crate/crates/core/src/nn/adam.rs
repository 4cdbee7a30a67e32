//! Adam with bias correction, one state per network.

use super::{Mlp, MlpGrads, NnError};
use ndarray::{Array1, Array2, Zip};

#[derive(Clone, Debug)]
pub struct AdamState {
    pub(crate) lr: f64,
    pub(crate) beta1: f64,
    pub(crate) beta2: f64,
    pub(crate) eps: f64,
    pub(crate) t: u64,
    pub(crate) m_w: Vec<Array2<f64>>,
    pub(crate) v_w: Vec<Array2<f64>>,
    pub(crate) m_b: Vec<Array1<f64>>,
    pub(crate) v_b: Vec<Array1<f64>>,
}

impl AdamState {
    pub fn new(mlp: &Mlp, lr: f64) -> Self {
        AdamState {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m_w: mlp.layers().iter().map(|l| Array2::zeros(l.w.dim())).collect(),
            v_w: mlp.layers().iter().map(|l| Array2::zeros(l.w.dim())).collect(),
            m_b: mlp.layers().iter().map(|l| Array1::zeros(l.b.len())).collect(),
            v_b: mlp.layers().iter().map(|l| Array1::zeros(l.b.len())).collect(),
        }
    }

    pub fn lr(&self) -> f64 {
        self.lr
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    /// Applies one update. Non-finite gradients are rejected and leave both
    /// the parameters and the optimizer state untouched.
    pub fn step(&mut self, mlp: &mut Mlp, grads: &MlpGrads) -> Result<(), NnError> {
        if !grads.is_finite() {
            return Err(NnError::NonFiniteGradient);
        }
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t as i32);
        let bc2 = 1.0 - self.beta2.powi(self.t as i32);
        let (b1, b2, eps, lr) = (self.beta1, self.beta2, self.eps, self.lr);
        for (l, layer) in mlp.layers.iter_mut().enumerate() {
            Zip::from(&mut layer.w)
                .and(&mut self.m_w[l])
                .and(&mut self.v_w[l])
                .and(&grads.dw[l])
                .for_each(|p, m, v, &g| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
                });
            Zip::from(&mut layer.b)
                .and(&mut self.m_b[l])
                .and(&mut self.v_b[l])
                .and(&grads.db[l])
                .for_each(|p, m, v, &g| {
                    *m = b1 * *m + (1.0 - b1) * g;
                    *v = b2 * *v + (1.0 - b2) * g * g;
                    *p -= lr * (*m / bc1) / ((*v / bc2).sqrt() + eps);
                });
        }
        Ok(())
    }
}
