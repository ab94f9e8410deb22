//! RMSprop and Adam parameter updates.
//!
//! The optimizer owns per-parameter accumulator tensors shaped like the
//! network it was built for; it is not reusable across networks. Note the
//! epsilon placement differs between the two rules on purpose: RMSprop adds
//! it inside the square root (`w -= lr * g / sqrt(acc + eps)`), Adam
//! outside (`w -= lr * m_hat / (sqrt(v_hat) + eps)`).

use ndarray::{azip, Array, Array1, Array2, Dimension};
use serde::{Deserialize, Serialize};

use super::network::{Grads, Network};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OptimizerKind {
    RmsProp { lr: f64, rho: f64, eps: f64 },
    Adam { lr: f64, beta1: f64, beta2: f64, eps: f64 },
}

impl OptimizerKind {
    pub fn rmsprop(lr: f64) -> Self {
        OptimizerKind::RmsProp {
            lr,
            rho: 0.9,
            eps: 1e-7,
        }
    }

    pub fn adam(lr: f64) -> Self {
        OptimizerKind::Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-7,
        }
    }
}

pub struct Optimizer {
    kind: OptimizerKind,
    /// Second-moment accumulators (both rules).
    sq_w: Vec<Array2<f64>>,
    sq_b: Vec<Array1<f64>>,
    /// First-moment accumulators (Adam only; empty for RMSprop).
    mom_w: Vec<Array2<f64>>,
    mom_b: Vec<Array1<f64>>,
    /// Completed steps, for Adam bias correction.
    t: u64,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, net: &Network) -> Self {
        let sq_w: Vec<_> = net.weights().iter().map(|w| Array2::zeros(w.raw_dim())).collect();
        let sq_b: Vec<_> = net.biases().iter().map(|b| Array1::zeros(b.raw_dim())).collect();
        let (mom_w, mom_b) = match kind {
            OptimizerKind::Adam { .. } => (sq_w.clone(), sq_b.clone()),
            OptimizerKind::RmsProp { .. } => (Vec::new(), Vec::new()),
        };
        Self {
            kind,
            sq_w,
            sq_b,
            mom_w,
            mom_b,
            t: 0,
        }
    }

    pub fn step(&mut self, net: &mut Network, grads: &Grads) {
        self.t += 1;
        match self.kind {
            OptimizerKind::RmsProp { lr, rho, eps } => {
                let (weights, biases) = net.params_mut();
                for l in 0..weights.len() {
                    rmsprop_tensor(&mut weights[l], &grads.weights[l], &mut self.sq_w[l], lr, rho, eps);
                    rmsprop_tensor(&mut biases[l], &grads.biases[l], &mut self.sq_b[l], lr, rho, eps);
                }
            }
            OptimizerKind::Adam {
                lr,
                beta1,
                beta2,
                eps,
            } => {
                let bc1 = 1.0 - beta1.powi(self.t as i32);
                let bc2 = 1.0 - beta2.powi(self.t as i32);
                let (weights, biases) = net.params_mut();
                for l in 0..weights.len() {
                    adam_tensor(
                        &mut weights[l],
                        &grads.weights[l],
                        &mut self.mom_w[l],
                        &mut self.sq_w[l],
                        (lr, beta1, beta2, eps),
                        (bc1, bc2),
                    );
                    adam_tensor(
                        &mut biases[l],
                        &grads.biases[l],
                        &mut self.mom_b[l],
                        &mut self.sq_b[l],
                        (lr, beta1, beta2, eps),
                        (bc1, bc2),
                    );
                }
            }
        }
    }
}

// Gradient tensors are not always standard layout (a transposed matmul
// result, for instance), so these walk them with azip rather than slices.

fn rmsprop_tensor<D: Dimension>(
    param: &mut Array<f64, D>,
    grad: &Array<f64, D>,
    acc: &mut Array<f64, D>,
    lr: f64,
    rho: f64,
    eps: f64,
) {
    azip!((p in param, &g in grad, a in acc) {
        *a = rho * *a + (1.0 - rho) * g * g;
        *p -= lr * g / (*a + eps).sqrt();
    });
}

fn adam_tensor<D: Dimension>(
    param: &mut Array<f64, D>,
    grad: &Array<f64, D>,
    mom: &mut Array<f64, D>,
    sq: &mut Array<f64, D>,
    (lr, beta1, beta2, eps): (f64, f64, f64, f64),
    (bc1, bc2): (f64, f64),
) {
    azip!((p in param, &g in grad, m in mom, v in sq) {
        *m = beta1 * *m + (1.0 - beta1) * g;
        *v = beta2 * *v + (1.0 - beta2) * g * g;
        let m_hat = *m / bc1;
        let v_hat = *v / bc2;
        *p -= lr * m_hat / (v_hat.sqrt() + eps);
    });
}
