//! The network itself: init, forward, backward, minibatch training, and a
//! plain-text dump format for persistence.

use std::io::{BufRead, Write};

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{Activation, LossKind, NetworkSpec, Optimizer, OptimizerKind};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Network {
    spec: NetworkSpec,
    /// One `[fan_in, width]` matrix per layer; inputs are row vectors, so
    /// the forward step is `x.dot(W) + b`.
    weights: Vec<Array2<f64>>,
    biases: Vec<Array1<f64>>,
}

/// Gradients from one backward pass, shaped like the network parameters.
pub struct Grads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    /// Gradient with respect to the network input. This is what lets a
    /// generator train through a frozen discriminator: run the
    /// discriminator's backward pass, keep only `input`, and feed it into
    /// the generator's backward pass.
    pub input: Array2<f64>,
}

/// Intermediate values from a training forward pass.
pub struct Cache {
    input: Array2<f64>,
    /// Pre-activations per layer.
    zs: Vec<Array2<f64>>,
    /// Post-activation, post-dropout outputs per layer.
    acts: Vec<Array2<f64>>,
    /// Inverted-dropout masks where applied; elements are 0 (dropped) or
    /// `1/(1-p)` (kept and rescaled), so inference needs no rescaling.
    masks: Vec<Option<Array2<f64>>>,
}

impl Cache {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("network has at least one layer")
    }

    pub fn logits(&self) -> &Array2<f64> {
        self.zs.last().expect("network has at least one layer")
    }

    /// Pre-activations per layer, for callers probing the forward pass
    /// (gradient checks use these to avoid ReLU kinks).
    pub fn pre_activations(&self) -> &[Array2<f64>] {
        &self.zs
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub optimizer: OptimizerKind,
    pub epochs: usize,
    pub batch_size: usize,
}

impl Network {
    /// Fresh network with weights drawn from
    /// `U(-1/sqrt(fan_in), +1/sqrt(fan_in))` and zero biases.
    pub fn new(spec: NetworkSpec, rng: &mut ChaCha8Rng) -> Result<Self> {
        spec.validate()?;
        let mut weights = Vec::with_capacity(spec.layers.len());
        let mut biases = Vec::with_capacity(spec.layers.len());
        let mut fan_in = spec.input_width;
        for layer in &spec.layers {
            let bound = 1.0 / (fan_in as f64).sqrt();
            weights.push(Array2::from_shape_fn((fan_in, layer.width), |_| {
                rng.random_range(-bound..bound)
            }));
            biases.push(Array1::zeros(layer.width));
            fan_in = layer.width;
        }
        Ok(Self {
            spec,
            weights,
            biases,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[Array2<f64>] {
        &self.weights
    }

    pub fn biases(&self) -> &[Array1<f64>] {
        &self.biases
    }

    pub fn params_mut(&mut self) -> (&mut [Array2<f64>], &mut [Array1<f64>]) {
        (&mut self.weights, &mut self.biases)
    }

    fn check_input(&self, x: &ArrayView2<f64>) -> Result<()> {
        if x.ncols() != self.spec.input_width {
            return Err(Error::ShapeMismatch {
                context: "network input",
                expected: format!("{} columns", self.spec.input_width),
                got: format!("{} columns", x.ncols()),
            });
        }
        Ok(())
    }

    /// Inference-mode forward pass: no dropout, activations applied as
    /// specified (so a softmax head yields class probabilities).
    pub fn infer(&self, x: ArrayView2<f64>) -> Array2<f64> {
        assert!(
            self.check_input(&x).is_ok(),
            "input has {} columns, network expects {}",
            x.ncols(),
            self.spec.input_width
        );
        let mut a = x.to_owned();
        for (l, layer) in self.spec.layers.iter().enumerate() {
            let mut z = a.dot(&self.weights[l]);
            z += &self.biases[l];
            a = layer.activation.apply(&z);
        }
        a
    }

    /// Training-mode forward pass. Dropout masks are drawn from
    /// `dropout_rng`; pass `None` to disable dropout (used by gradient
    /// checks and by GAN generator steps, which must see the frozen
    /// discriminator deterministically).
    pub fn forward_cached(
        &self,
        x: ArrayView2<f64>,
        mut dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Cache {
        let n = self.spec.layers.len();
        let mut zs = Vec::with_capacity(n);
        let mut acts: Vec<Array2<f64>> = Vec::with_capacity(n);
        let mut masks = Vec::with_capacity(n);
        for l in 0..n {
            let layer = &self.spec.layers[l];
            let mut z = if l == 0 {
                x.dot(&self.weights[l])
            } else {
                acts[l - 1].dot(&self.weights[l])
            };
            z += &self.biases[l];
            let mut act = layer.activation.apply(&z);
            let mask = match (layer.dropout > 0.0, dropout_rng.as_deref_mut()) {
                (true, Some(rng)) => {
                    let keep = 1.0 - layer.dropout;
                    let m = Array2::from_shape_fn(act.raw_dim(), |_| {
                        if rng.random::<f64>() < keep {
                            1.0 / keep
                        } else {
                            0.0
                        }
                    });
                    act *= &m;
                    Some(m)
                }
                _ => None,
            };
            zs.push(z);
            acts.push(act);
            masks.push(mask);
        }
        Cache {
            input: x.to_owned(),
            zs,
            acts,
            masks,
        }
    }

    /// Shared backward pass, starting from `delta` = dL/d(final logits).
    fn backward_core(&self, cache: &Cache, delta: Array2<f64>) -> Grads {
        let n = self.spec.layers.len();
        let mut d_weights: Vec<Array2<f64>> = Vec::with_capacity(n);
        let mut d_biases: Vec<Array1<f64>> = Vec::with_capacity(n);
        let mut delta = delta;
        let mut d_input = None;
        for l in (0..n).rev() {
            let a_prev = if l == 0 {
                cache.input.view()
            } else {
                cache.acts[l - 1].view()
            };
            d_weights.push(a_prev.t().dot(&delta));
            d_biases.push(delta.sum_axis(Axis(0)));
            let mut d_a_prev = delta.dot(&self.weights[l].t());
            if l == 0 {
                d_input = Some(d_a_prev);
            } else {
                // Forward was a_prev = mask * act(z); undo in reverse order.
                if let Some(mask) = &cache.masks[l - 1] {
                    d_a_prev *= mask;
                }
                let deriv = self.spec.layers[l - 1].activation.derivative(&cache.zs[l - 1]);
                delta = d_a_prev * &deriv;
            }
        }
        d_weights.reverse();
        d_biases.reverse();
        Grads {
            weights: d_weights,
            biases: d_biases,
            input: d_input.expect("loop always reaches layer 0"),
        }
    }

    /// Mean loss and all gradients for one batch. The loss must match the
    /// output activation (softmax for categorical cross-entropy, sigmoid
    /// for sigmoid cross-entropy), since the two are fused.
    pub fn loss_and_grads(
        &self,
        x: ArrayView2<f64>,
        y: ArrayView2<f64>,
        loss: LossKind,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(f64, Grads)> {
        self.check_input(&x)?;
        if y.ncols() != self.spec.output_width() || y.nrows() != x.nrows() {
            return Err(Error::ShapeMismatch {
                context: "training targets",
                expected: format!("{} x {}", x.nrows(), self.spec.output_width()),
                got: format!("{} x {}", y.nrows(), y.ncols()),
            });
        }
        if self.spec.output_activation() != loss.expected_activation() {
            return Err(Error::InvalidConfig(format!(
                "loss {:?} requires {} output, network ends in {}",
                loss,
                loss.expected_activation().as_str(),
                self.spec.output_activation().as_str()
            )));
        }
        let cache = self.forward_cached(x, dropout_rng);
        let (value, delta) = loss.value_and_delta(cache.logits(), &y.to_owned());
        Ok((value, self.backward_core(&cache, delta)))
    }

    /// Backward pass from an externally supplied gradient with respect to
    /// the network *output* (post-activation). Used for the generator,
    /// whose loss is computed by the discriminator. Not valid for softmax
    /// outputs, which only exist fused with their loss.
    pub fn backward_from_output_grad(
        &self,
        cache: &Cache,
        d_output: &Array2<f64>,
    ) -> Grads {
        let last = self.spec.layers.len() - 1;
        let act = self.spec.layers[last].activation;
        assert!(
            act != Activation::Softmax,
            "softmax output gradients must come through the fused loss"
        );
        let delta = d_output * &act.derivative(&cache.zs[last]);
        self.backward_core(cache, delta)
    }

    /// Minibatch training. Each epoch shuffles the row order, then walks
    /// the data in `batch_size` chunks (final short chunk included).
    /// Returns the mean training loss per epoch. All randomness (shuffling
    /// and dropout) comes from `rng`, so a given seed reproduces training
    /// bit for bit.
    pub fn train(
        &mut self,
        x: ArrayView2<f64>,
        y: ArrayView2<f64>,
        cfg: &TrainConfig,
        rng: &mut ChaCha8Rng,
    ) -> Result<Vec<f64>> {
        if x.nrows() == 0 {
            return Err(Error::InvalidConfig("training set is empty".into()));
        }
        if cfg.batch_size == 0 {
            return Err(Error::InvalidConfig("batch_size must be positive".into()));
        }
        let mut opt = Optimizer::new(cfg.optimizer, self);
        let rows = x.nrows();
        let mut order: Vec<usize> = (0..rows).collect();
        let mut history = Vec::with_capacity(cfg.epochs);
        for _ in 0..cfg.epochs {
            order.shuffle(rng);
            let mut epoch_loss = 0.0;
            for chunk in order.chunks(cfg.batch_size) {
                let xb = x.select(Axis(0), chunk);
                let yb = y.select(Axis(0), chunk);
                let (loss, grads) =
                    self.loss_and_grads(xb.view(), yb.view(), cfg.loss, Some(rng))?;
                opt.step(self, &grads);
                epoch_loss += loss * chunk.len() as f64;
            }
            history.push(epoch_loss / rows as f64);
        }
        Ok(history)
    }

    /// Writes a versioned plain-text dump: the spec, then every parameter
    /// in order. Floats use the shortest representation that round-trips,
    /// so save/load reproduces the network exactly.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "coexsim-net v1")?;
        writeln!(out, "input {}", self.spec.input_width)?;
        for layer in &self.spec.layers {
            writeln!(
                out,
                "layer {} {} {}",
                layer.width,
                layer.activation.as_str(),
                layer.dropout
            )?;
        }
        writeln!(out, "params")?;
        for (w, b) in self.weights.iter().zip(&self.biases) {
            for row in w.rows() {
                let line: Vec<String> = row.iter().map(|v| v.to_string()).collect();
                writeln!(out, "{}", line.join(" "))?;
            }
            let line: Vec<String> = b.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(" "))?;
        }
        Ok(())
    }

    pub fn load<R: BufRead>(reader: R) -> Result<Self> {
        let bad = |msg: &str| Error::ModelParse(msg.to_string());
        let mut lines = reader.lines();
        let mut next = || -> Result<String> {
            lines
                .next()
                .ok_or_else(|| bad("unexpected end of dump"))?
                .map_err(Error::from)
        };
        if next()? != "coexsim-net v1" {
            return Err(bad("missing or unsupported header"));
        }
        let input_line = next()?;
        let input_width: usize = input_line
            .strip_prefix("input ")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("malformed input line"))?;
        let mut layers = Vec::new();
        loop {
            let line = next()?;
            if line == "params" {
                break;
            }
            let mut parts = line
                .strip_prefix("layer ")
                .ok_or_else(|| bad("expected layer or params line"))?
                .split_whitespace();
            let width: usize = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("malformed layer width"))?;
            let activation = parts
                .next()
                .and_then(Activation::from_str)
                .ok_or_else(|| bad("unknown activation"))?;
            let dropout: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| bad("malformed dropout"))?;
            layers.push(super::LayerSpec {
                width,
                activation,
                dropout,
            });
        }
        let spec = NetworkSpec {
            input_width,
            layers,
        };
        spec.validate()?;

        let parse_row = |line: &str, len: usize| -> Result<Vec<f64>> {
            let vals: std::result::Result<Vec<f64>, _> =
                line.split_whitespace().map(str::parse).collect();
            let vals = vals.map_err(|_| bad("malformed parameter value"))?;
            if vals.len() != len {
                return Err(bad("parameter row has wrong length"));
            }
            Ok(vals)
        };

        let mut weights = Vec::with_capacity(spec.layers.len());
        let mut biases = Vec::with_capacity(spec.layers.len());
        let mut fan_in = spec.input_width;
        for layer in &spec.layers {
            let mut w = Array2::zeros((fan_in, layer.width));
            for r in 0..fan_in {
                let vals = parse_row(&next()?, layer.width)?;
                w.row_mut(r).assign(&Array1::from(vals));
            }
            weights.push(w);
            biases.push(Array1::from(parse_row(&next()?, layer.width)?));
            fan_in = layer.width;
        }
        Ok(Self {
            spec,
            weights,
            biases,
        })
    }
}
