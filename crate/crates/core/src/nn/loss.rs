//! Cross-entropy losses, fused with the output activation.
//!
//! Both losses are computed from the pre-activation logits rather than the
//! activated outputs. Going through the activation first loses precision
//! (softmax saturates to exact 0/1 and the following log blows up); the
//! fused forms below stay finite for any logit, and the combined gradient
//! with respect to the logits collapses to `(activation(z) - target) / B`
//! in both cases.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{sigmoid, Activation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Softmax output, one-hot (or soft) row targets. Loss per row is
    /// `logsumexp(z) - sum_j y_j * z_j` for normalized targets.
    CategoricalCrossEntropy,
    /// Sigmoid output, independent binary targets per unit. Loss per
    /// element is `max(z, 0) - z*t + ln(1 + exp(-|z|))`.
    SigmoidCrossEntropy,
}

impl LossKind {
    /// Output activation this loss is fused with.
    pub fn expected_activation(self) -> Activation {
        match self {
            LossKind::CategoricalCrossEntropy => Activation::Softmax,
            LossKind::SigmoidCrossEntropy => Activation::Sigmoid,
        }
    }

    /// Mean loss over the batch and its gradient with respect to the
    /// logits. Loss sums over output units and averages over rows, so the
    /// gradient carries the `1/B` factor.
    pub(crate) fn value_and_delta(
        self,
        logits: &Array2<f64>,
        targets: &Array2<f64>,
    ) -> (f64, Array2<f64>) {
        assert_eq!(
            logits.raw_dim(),
            targets.raw_dim(),
            "logits and targets must have identical shape"
        );
        let batch = logits.nrows() as f64;
        match self {
            LossKind::CategoricalCrossEntropy => {
                let mut total = 0.0;
                for (zrow, yrow) in logits.rows().into_iter().zip(targets.rows()) {
                    let max = zrow.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    let lse = max + zrow.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
                    total += zrow
                        .iter()
                        .zip(yrow.iter())
                        .map(|(z, y)| y * (lse - z))
                        .sum::<f64>();
                }
                let mut delta = Activation::Softmax.apply(logits);
                delta -= targets;
                delta /= batch;
                (total / batch, delta)
            }
            LossKind::SigmoidCrossEntropy => {
                let mut total = 0.0;
                for (&z, &t) in logits.iter().zip(targets.iter()) {
                    total += z.max(0.0) - z * t + (-z.abs()).exp().ln_1p();
                }
                let mut delta = logits.mapv(sigmoid);
                delta -= targets;
                delta /= batch;
                (total / batch, delta)
            }
        }
    }
}
