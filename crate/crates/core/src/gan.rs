//! GAN-based augmentation of the learning phase.
//!
//! One generator/discriminator pair is trained per occupancy class, on the
//! per-slot sensed-value rows that class collected during the (short)
//! learning phase. The generator maps a Gaussian latent vector to one
//! slot's worth of values; since its output layer is a sigmoid, training
//! happens in a min-max scaled unit domain and generated rows are mapped
//! back to the value domain afterwards. Alternating updates: one
//! discriminator step on real-vs-generated rows, then one generator step
//! through the frozen discriminator (non-saturating target "real").
//!
//! Augmentation quota: `n` synthetic slots stand in for `n` real learning
//! slots, so they must contribute exactly `floor(n * S * p_s / F)` samples
//! per class, the sample count `n` real slots of that class would have
//! produced. Because a slot row holds `floor(S * p_s)` values and samples
//! are `F` wide, whole generated rows rarely hit that count on the nose;
//! we generate `ceil(count * F / width)` rows, pool their values like real
//! slots, and truncate to the exact sample count.

use ndarray::{s, Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::channel::Occupancy;
use crate::config::FrameConfig;
use crate::error::{Error, Result};
use crate::nn::{
    Activation, LayerSpec, LossKind, Network, NetworkSpec, Optimizer, OptimizerKind,
};
use crate::sensing::{LabelSource, LabeledSample};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanConfig {
    pub latent_dim: usize,
    pub hidden: Vec<usize>,
    /// Alternating discriminator/generator update rounds.
    pub iterations: usize,
    pub batch_size: usize,
    pub gen_learning_rate: f64,
    pub disc_learning_rate: f64,
    /// First-moment decay for both Adam optimizers. GAN updates chase a
    /// moving target, where the usual 0.9 carries too much stale momentum.
    pub adam_beta1: f64,
}

impl Default for GanConfig {
    fn default() -> Self {
        Self {
            latent_dim: 16,
            hidden: vec![128, 128, 128],
            iterations: 2000,
            batch_size: 32,
            gen_learning_rate: 1e-3,
            disc_learning_rate: 1e-3,
            adam_beta1: 0.5,
        }
    }
}

impl GanConfig {
    fn generator_spec(&self, width: usize) -> NetworkSpec {
        let mut layers: Vec<LayerSpec> = self
            .hidden
            .iter()
            .map(|&w| LayerSpec::new(w, Activation::Sigmoid))
            .collect();
        layers.push(LayerSpec::new(width, Activation::Sigmoid));
        NetworkSpec {
            input_width: self.latent_dim,
            layers,
        }
    }

    fn discriminator_spec(&self, width: usize) -> NetworkSpec {
        let mut layers: Vec<LayerSpec> = self
            .hidden
            .iter()
            .map(|&w| LayerSpec::new(w, Activation::Sigmoid))
            .collect();
        layers.push(LayerSpec::new(1, Activation::Sigmoid));
        NetworkSpec {
            input_width: width,
            layers,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent_dim == 0 || self.batch_size == 0 || self.iterations == 0 {
            return Err(Error::InvalidConfig(
                "latent_dim, batch_size and iterations must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Affine map between the data's value range and the generator's unit
/// output range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValueScaler {
    pub min: f64,
    pub max: f64,
}

impl ValueScaler {
    pub fn fit(data: ArrayView2<f64>) -> Self {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for &v in data.iter() {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            // Empty input; any non-degenerate range will do, it never gets
            // used because training rejects empty data first.
            return Self { min: 0.0, max: 1.0 };
        }
        if min == max {
            // Constant data: widen so the map stays invertible.
            min -= 0.5;
            max += 0.5;
        }
        Self { min, max }
    }

    pub fn to_unit(&self, x: &Array2<f64>) -> Array2<f64> {
        let span = self.max - self.min;
        x.mapv(|v| (v - self.min) / span)
    }

    pub fn from_unit(&self, u: &Array2<f64>) -> Array2<f64> {
        let span = self.max - self.min;
        u.mapv(|v| self.min + v * span)
    }
}

/// A trained generator for one occupancy class.
pub struct TrainedGenerator {
    net: Network,
    scaler: ValueScaler,
    latent_dim: usize,
    width: usize,
    /// Mean (discriminator, generator) loss per training round, for
    /// collapse diagnostics.
    pub loss_history: Vec<(f64, f64)>,
}

impl TrainedGenerator {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn scaler(&self) -> ValueScaler {
        self.scaler
    }

    /// Generates `count` slot rows in the value domain.
    pub fn generate_slots(&self, count: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        let z = draw_latent(count, self.latent_dim, rng);
        self.scaler.from_unit(&self.net.infer(z.view()))
    }
}

fn draw_latent(rows: usize, dim: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, dim), |_| StandardNormal.sample(rng))
}

/// Samples `count` rows from `data` with replacement.
fn sample_rows(data: &Array2<f64>, count: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    use rand::Rng;
    let idx: Vec<usize> = (0..count).map(|_| rng.random_range(0..data.nrows())).collect();
    data.select(Axis(0), &idx)
}

/// Trains one generator/discriminator pair on real slot rows (value
/// domain, one row per slot).
pub fn train_gan(
    real_slots: ArrayView2<f64>,
    cfg: &GanConfig,
    rng: &mut ChaCha8Rng,
) -> Result<TrainedGenerator> {
    cfg.validate()?;
    if real_slots.nrows() == 0 || real_slots.ncols() == 0 {
        return Err(Error::InvalidConfig(
            "generator training needs at least one slot row".into(),
        ));
    }
    let width = real_slots.ncols();
    let scaler = ValueScaler::fit(real_slots);
    let real_unit = scaler.to_unit(&real_slots.to_owned());

    let adam = |lr: f64| OptimizerKind::Adam {
        lr,
        beta1: cfg.adam_beta1,
        beta2: 0.999,
        eps: 1e-7,
    };
    let mut gen = Network::new(cfg.generator_spec(width), rng)?;
    let mut disc = Network::new(cfg.discriminator_spec(width), rng)?;
    let mut gen_opt = Optimizer::new(adam(cfg.gen_learning_rate), &gen);
    let mut disc_opt = Optimizer::new(adam(cfg.disc_learning_rate), &disc);

    let b = cfg.batch_size;
    let real_target = Array2::ones((b, 1));
    let fake_target = Array2::zeros((b, 1));
    let mut targets = Array2::zeros((2 * b, 1));
    targets.slice_mut(s![..b, ..]).assign(&real_target);
    targets.slice_mut(s![b.., ..]).assign(&fake_target);

    let mut history = Vec::with_capacity(cfg.iterations);
    for _ in 0..cfg.iterations {
        // Discriminator round: real rows labeled 1, generated rows 0.
        let real_batch = sample_rows(&real_unit, b, rng);
        let fake_batch = gen.infer(draw_latent(b, cfg.latent_dim, rng).view());
        let mut x = Array2::zeros((2 * b, width));
        x.slice_mut(s![..b, ..]).assign(&real_batch);
        x.slice_mut(s![b.., ..]).assign(&fake_batch);
        let (d_loss, d_grads) =
            disc.loss_and_grads(x.view(), targets.view(), LossKind::SigmoidCrossEntropy, None)?;
        disc_opt.step(&mut disc, &d_grads);

        // Generator round: push fresh fakes toward the "real" label
        // through the frozen discriminator. The discriminator's input
        // gradient is the loss gradient at the generator's output.
        let z = draw_latent(b, cfg.latent_dim, rng);
        let gen_cache = gen.forward_cached(z.view(), None);
        let (g_loss, through_disc) = disc.loss_and_grads(
            gen_cache.output().view(),
            real_target.view(),
            LossKind::SigmoidCrossEntropy,
            None,
        )?;
        let g_grads = gen.backward_from_output_grad(&gen_cache, &through_disc.input);
        gen_opt.step(&mut gen, &g_grads);

        history.push((d_loss, g_loss));
    }

    Ok(TrainedGenerator {
        net: gen,
        scaler,
        latent_dim: cfg.latent_dim,
        width,
        loss_history: history,
    })
}

/// Per-class generators for the two occupancy states.
pub struct GanPair {
    pub idle: TrainedGenerator,
    pub busy: TrainedGenerator,
}

/// How much to generate for a quota of `synthetic_slots` stand-in slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AugmentPlan {
    /// Samples each class receives: `floor(n * S * p_s / F)`.
    pub per_class: usize,
    /// Generated rows needed to cover that many samples.
    pub slots_to_generate: usize,
}

impl AugmentPlan {
    pub fn new(synthetic_slots: usize, cfg: &FrameConfig) -> Self {
        let per_class = (synthetic_slots as f64 * cfg.slot_len as f64 * cfg.sensing_fraction
            / cfg.sample_width as f64)
            .floor() as usize;
        let width = cfg.sensing_values_per_slot();
        let slots_to_generate = (per_class * cfg.sample_width).div_ceil(width);
        Self {
            per_class,
            slots_to_generate,
        }
    }
}

/// Generates the synthetic samples for a quota of `synthetic_slots`
/// stand-in slots: idle class first, then busy, each pooled row-major and
/// cut into `sample_width`-wide samples exactly like real slots, then
/// truncated to the planned count.
pub fn augment(
    gens: &GanPair,
    synthetic_slots: usize,
    cfg: &FrameConfig,
    rng: &mut ChaCha8Rng,
) -> Vec<LabeledSample> {
    let plan = AugmentPlan::new(synthetic_slots, cfg);
    let mut samples = Vec::with_capacity(2 * plan.per_class);
    for (generator, label) in [(&gens.idle, Occupancy::Idle), (&gens.busy, Occupancy::Busy)] {
        let rows = generator.generate_slots(plan.slots_to_generate, rng);
        let pooled: Vec<f64> = rows.iter().cloned().collect();
        samples.extend(
            pooled
                .chunks_exact(cfg.sample_width)
                .take(plan.per_class)
                .map(|chunk| LabeledSample {
                    values: chunk.to_vec(),
                    label,
                    source: LabelSource::Synthetic,
                }),
        );
    }
    samples
}
