//! A small dense neural network, written out by hand.
//!
//! Everything that learns in this simulator (the occupancy classifier, the
//! GAN generator and discriminator) is a stack of fully connected layers,
//! so that is all this module implements: f64 weights, ReLU / sigmoid /
//! softmax / linear activations, inverted dropout, cross-entropy losses
//! fused with the final activation for numerical stability, and RMSprop /
//! Adam updates. No autograd graph; the backward pass is the usual chain
//! rule over the layer stack, plus a gradient with respect to the input so
//! a generator can be trained through a frozen discriminator.

mod loss;
mod network;
mod optim;

pub use loss::LossKind;
pub use network::{Cache, Grads, Network, TrainConfig};
pub use optim::{Optimizer, OptimizerKind};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Linear,
    Relu,
    Sigmoid,
    Softmax,
}

impl Activation {
    pub fn as_str(self) -> &'static str {
        match self {
            Activation::Linear => "linear",
            Activation::Relu => "relu",
            Activation::Sigmoid => "sigmoid",
            Activation::Softmax => "softmax",
        }
    }

    pub fn from_str(s: &str) -> Option<Self> {
        Some(match s {
            "linear" => Activation::Linear,
            "relu" => Activation::Relu,
            "sigmoid" => Activation::Sigmoid,
            "softmax" => Activation::Softmax,
            _ => return None,
        })
    }

    pub(crate) fn apply(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Linear => z.clone(),
            Activation::Relu => z.mapv(|v| v.max(0.0)),
            Activation::Sigmoid => z.mapv(sigmoid),
            Activation::Softmax => {
                let mut out = z.clone();
                for mut row in out.rows_mut() {
                    let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                    row.mapv_inplace(|v| (v - max).exp());
                    let sum = row.sum();
                    row.mapv_inplace(|v| v / sum);
                }
                out
            }
        }
    }

    /// Elementwise derivative, given the pre-activation `z`. Softmax has no
    /// elementwise derivative (its Jacobian couples units); it only appears
    /// as a final layer fused with the categorical cross-entropy, where the
    /// combined gradient is formed directly, so it never reaches here.
    pub(crate) fn derivative(self, z: &Array2<f64>) -> Array2<f64> {
        match self {
            Activation::Linear => Array2::ones(z.raw_dim()),
            Activation::Relu => z.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 }),
            Activation::Sigmoid => z.mapv(|v| {
                let s = sigmoid(v);
                s * (1.0 - s)
            }),
            Activation::Softmax => unreachable!("softmax is only valid fused with its loss"),
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LayerSpec {
    pub width: usize,
    pub activation: Activation,
    /// Inverted-dropout rate applied to this layer's output during
    /// training. Must be 0 on the final layer.
    pub dropout: f64,
}

impl LayerSpec {
    pub fn new(width: usize, activation: Activation) -> Self {
        Self {
            width,
            activation,
            dropout: 0.0,
        }
    }

    pub fn with_dropout(width: usize, activation: Activation, dropout: f64) -> Self {
        Self {
            width,
            activation,
            dropout,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub input_width: usize,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.input_width == 0 {
            return fail("input_width must be positive".into());
        }
        if self.layers.is_empty() {
            return fail("network needs at least one layer".into());
        }
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            if layer.width == 0 {
                return fail(format!("layer {i} has zero width"));
            }
            if !(0.0..1.0).contains(&layer.dropout) {
                return fail(format!("layer {i} dropout {} not in [0, 1)", layer.dropout));
            }
            if layer.activation == Activation::Softmax && i != last {
                return fail(format!("softmax on hidden layer {i}; only valid as output"));
            }
        }
        if self.layers[last].dropout != 0.0 {
            // Dropping output units would randomly zero class scores and
            // break the fused loss gradients.
            return fail("final layer must not use dropout".into());
        }
        Ok(())
    }

    pub fn output_width(&self) -> usize {
        self.layers.last().map_or(0, |l| l.width)
    }

    pub fn output_activation(&self) -> Activation {
        self.layers.last().map_or(Activation::Linear, |l| l.activation)
    }
}
