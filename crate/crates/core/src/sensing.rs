//! From sensed values to a trained occupancy classifier.
//!
//! During a learning slot the user first senses `floor(S * p_s)` values,
//! then spends the remaining units on short probe transmissions. A probe
//! succeeds only if the incumbent is actually idle and the probe is not
//! corrupted by noise, so the success fraction is a label for the slot the
//! user can compute without ever observing the incumbent directly. Sensed
//! values are pooled per inferred class and cut into `sample_width`-wide
//! training samples for a softmax classifier; the classifier's false-alarm
//! and misdetection rates against fresh ground-truth data are the
//! quantities the throughput model consumes.

use std::io::Write;

use ndarray::{Array2, ArrayView2, Axis};
use rand_chacha::ChaCha8Rng;

use crate::channel::{ChannelModel, Occupancy};
use crate::config::FrameConfig;
use crate::error::{Error, Result};
use crate::nn::{
    Activation, LayerSpec, LossKind, Network, NetworkSpec, OptimizerKind, TrainConfig,
};

/// Classifier output indices.
pub const IDLE_CLASS: usize = 0;
pub const BUSY_CLASS: usize = 1;

/// Where a training label came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LabelSource {
    /// True occupancy, available only to experiments, never to the user.
    GroundTruth,
    /// Inferred from probe outcomes during a learning slot.
    ProbeInferred,
    /// Produced by a generator trained on probe-labeled data.
    Synthetic,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::GroundTruth => "truth",
            LabelSource::ProbeInferred => "probe",
            LabelSource::Synthetic => "synthetic",
        }
    }
}

/// One classifier training sample: `sample_width` sensed values plus the
/// occupancy label they were filed under.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    pub values: Vec<f64>,
    pub label: Occupancy,
    pub source: LabelSource,
}

/// Result of the probe transmissions at the tail of a learning slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProbeOutcome {
    pub successes: usize,
    pub attempts: usize,
}

impl ProbeOutcome {
    /// The slot is labeled idle when at least half the probes got through.
    pub fn infers_idle(self) -> bool {
        2 * self.successes >= self.attempts
    }

    pub fn inferred(self) -> Occupancy {
        if self.infers_idle() {
            Occupancy::Idle
        } else {
            Occupancy::Busy
        }
    }
}

/// Everything observed in one learning slot.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotRecord {
    pub index: usize,
    pub truth: Occupancy,
    pub inferred: Occupancy,
    pub probe: ProbeOutcome,
    /// Sensed values, `floor(S * p_s)` of them.
    pub values: Vec<f64>,
}

/// Sends the slot's probe units and counts successes. A probe gets through
/// only when the incumbent is idle (otherwise it collides) and its own
/// transmission survives the noise threshold.
pub fn simulate_probes(
    cfg: &FrameConfig,
    channel: &ChannelModel,
    truth: Occupancy,
    rng: &mut ChaCha8Rng,
) -> ProbeOutcome {
    let attempts = cfg.probe_units_per_slot();
    let successes = (0..attempts)
        .filter(|_| {
            let noise_ok = !channel.burst_noise_failure(1, cfg.noise_threshold, rng);
            !truth.is_busy() && noise_ok
        })
        .count();
    ProbeOutcome {
        successes,
        attempts,
    }
}

/// Runs one learning slot: sense, probe, label.
pub fn observe_learning_slot(
    cfg: &FrameConfig,
    channel: &ChannelModel,
    index: usize,
    truth: Occupancy,
    gain: f64,
    sensing_rng: &mut ChaCha8Rng,
    probe_rng: &mut ChaCha8Rng,
) -> SlotRecord {
    let values: Vec<f64> = (0..cfg.sensing_values_per_slot())
        .map(|_| channel.sense(truth, gain, sensing_rng))
        .collect();
    let probe = simulate_probes(cfg, channel, truth, probe_rng);
    SlotRecord {
        index,
        truth,
        inferred: probe.inferred(),
        probe,
        values,
    }
}

/// Pools sensed values per class (in slot order) and cuts each pool into
/// `sample_width`-wide samples. A tail shorter than `sample_width` is
/// discarded, so a class with `v` pooled values yields `floor(v / width)`
/// samples.
pub fn build_samples(
    slots: &[SlotRecord],
    sample_width: usize,
    use_truth: bool,
) -> Vec<LabeledSample> {
    assert!(sample_width > 0, "sample_width must be positive");
    let source = if use_truth {
        LabelSource::GroundTruth
    } else {
        LabelSource::ProbeInferred
    };
    let mut pools = [Vec::new(), Vec::new()];
    for slot in slots {
        let label = if use_truth { slot.truth } else { slot.inferred };
        let pool = if label.is_busy() { 1 } else { 0 };
        pools[pool].extend_from_slice(&slot.values);
    }
    let mut samples = Vec::new();
    for (pool_idx, pool) in pools.iter().enumerate() {
        let label = if pool_idx == 1 {
            Occupancy::Busy
        } else {
            Occupancy::Idle
        };
        for chunk in pool.chunks_exact(sample_width) {
            samples.push(LabeledSample {
                values: chunk.to_vec(),
                label,
                source,
            });
        }
    }
    samples
}

/// Sensed-value rows (one per slot) for every slot filed under `label`,
/// as a matrix for generator training.
pub fn slot_value_matrix(
    slots: &[SlotRecord],
    label: Occupancy,
    use_truth: bool,
) -> Array2<f64> {
    let rows: Vec<&SlotRecord> = slots
        .iter()
        .filter(|s| (if use_truth { s.truth } else { s.inferred }) == label)
        .collect();
    let width = rows.first().map_or(0, |s| s.values.len());
    let mut out = Array2::zeros((rows.len(), width));
    for (i, slot) in rows.iter().enumerate() {
        for (j, v) in slot.values.iter().enumerate() {
            out[[i, j]] = *v;
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassifierConfig {
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
}

impl Default for ClassifierConfig {
    fn default() -> Self {
        Self {
            hidden: vec![128, 64, 32],
            dropout: 0.2,
            epochs: 200,
            batch_size: 32,
            learning_rate: 1e-3,
        }
    }
}

impl ClassifierConfig {
    pub fn network_spec(&self, input_width: usize) -> NetworkSpec {
        let mut layers: Vec<LayerSpec> = self
            .hidden
            .iter()
            .map(|&w| LayerSpec::with_dropout(w, Activation::Relu, self.dropout))
            .collect();
        layers.push(LayerSpec::new(2, Activation::Softmax));
        NetworkSpec {
            input_width,
            layers,
        }
    }
}

/// Stacks samples into network inputs and one-hot targets.
pub fn samples_to_arrays(
    samples: &[LabeledSample],
    sample_width: usize,
) -> Result<(Array2<f64>, Array2<f64>)> {
    let mut x = Array2::zeros((samples.len(), sample_width));
    let mut y = Array2::zeros((samples.len(), 2));
    for (i, sample) in samples.iter().enumerate() {
        if sample.values.len() != sample_width {
            return Err(Error::ShapeMismatch {
                context: "training sample",
                expected: format!("{sample_width} values"),
                got: format!("{} values", sample.values.len()),
            });
        }
        for (j, v) in sample.values.iter().enumerate() {
            x[[i, j]] = *v;
        }
        let class = if sample.label.is_busy() {
            BUSY_CLASS
        } else {
            IDLE_CLASS
        };
        y[[i, class]] = 1.0;
    }
    Ok((x, y))
}

/// Trains the occupancy classifier on the given samples. Fails with
/// [`Error::EmptyClass`] when a class has no samples at all, which happens
/// when every learning slot was labeled the same way.
pub fn train_classifier(
    samples: &[LabeledSample],
    sample_width: usize,
    cfg: &ClassifierConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Network> {
    for class in [Occupancy::Idle, Occupancy::Busy] {
        if !samples.iter().any(|s| s.label == class) {
            return Err(Error::EmptyClass(class));
        }
    }
    let (x, y) = samples_to_arrays(samples, sample_width)?;
    let mut net = Network::new(cfg.network_spec(sample_width), rng)?;
    let train_cfg = TrainConfig {
        loss: LossKind::CategoricalCrossEntropy,
        optimizer: OptimizerKind::rmsprop(cfg.learning_rate),
        epochs: cfg.epochs,
        batch_size: cfg.batch_size,
    };
    net.train(x.view(), y.view(), &train_cfg, rng)?;
    Ok(net)
}

/// Argmax over the two-way softmax output, for a batch of inputs.
pub fn classify_batch(net: &Network, x: ArrayView2<f64>) -> Vec<Occupancy> {
    let probs = net.infer(x);
    probs
        .axis_iter(Axis(0))
        .map(|row| {
            if row[BUSY_CLASS] > row[IDLE_CLASS] {
                Occupancy::Busy
            } else {
                Occupancy::Idle
            }
        })
        .collect()
}

/// Confusion rates of occupancy decisions against ground truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassifierMetrics {
    /// P(decide busy | truly idle): wasted transmission opportunities.
    pub false_alarm: f64,
    /// P(decide idle | truly busy): interference with the incumbent.
    pub misdetection: f64,
    /// Fraction of all decisions that matched the truth.
    pub accuracy: f64,
    pub idle_total: usize,
    pub busy_total: usize,
}

impl ClassifierMetrics {
    /// Folds per-sample decisions into confusion rates. Errors when either
    /// class is absent from the ground truth, since the corresponding rate
    /// would be undefined.
    pub fn from_decisions(truth: &[Occupancy], decided: &[Occupancy]) -> Result<Self> {
        assert_eq!(truth.len(), decided.len());
        let mut idle_total = 0;
        let mut busy_total = 0;
        let mut false_alarms = 0;
        let mut misdetections = 0;
        for (&t, &d) in truth.iter().zip(decided) {
            match t {
                Occupancy::Idle => {
                    idle_total += 1;
                    if d.is_busy() {
                        false_alarms += 1;
                    }
                }
                Occupancy::Busy => {
                    busy_total += 1;
                    if !d.is_busy() {
                        misdetections += 1;
                    }
                }
            }
        }
        if idle_total == 0 {
            return Err(Error::EmptyClass(Occupancy::Idle));
        }
        if busy_total == 0 {
            return Err(Error::EmptyClass(Occupancy::Busy));
        }
        let errors = false_alarms + misdetections;
        Ok(Self {
            false_alarm: false_alarms as f64 / idle_total as f64,
            misdetection: misdetections as f64 / busy_total as f64,
            accuracy: 1.0 - errors as f64 / (idle_total + busy_total) as f64,
            idle_total,
            busy_total,
        })
    }
}

/// Fresh ground-truth evaluation data: `per_class` samples of each class,
/// each sample being `sample_width` sensed values from its own slot (so
/// Rayleigh samples get an independent gain each).
pub fn make_eval_set(
    cfg: &FrameConfig,
    channel: &ChannelModel,
    per_class: usize,
    rng: &mut ChaCha8Rng,
) -> (Array2<f64>, Vec<Occupancy>) {
    let width = cfg.sample_width;
    let mut x = Array2::zeros((2 * per_class, width));
    let mut truth = Vec::with_capacity(2 * per_class);
    for i in 0..2 * per_class {
        let occ = if i < per_class {
            Occupancy::Idle
        } else {
            Occupancy::Busy
        };
        let gain = channel.draw_gain(rng);
        for j in 0..width {
            x[[i, j]] = channel.sense(occ, gain, rng);
        }
        truth.push(occ);
    }
    (x, truth)
}

/// Measures the network's confusion rates against ground-truth labels.
pub fn evaluate(
    net: &Network,
    x: ArrayView2<f64>,
    truth: &[Occupancy],
) -> Result<ClassifierMetrics> {
    ClassifierMetrics::from_decisions(truth, &classify_batch(net, x))
}

/// Dumps samples as CSV (`label,source,v1..vN`) for offline inspection.
pub fn write_samples_csv<W: Write>(out: W, samples: &[LabeledSample]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let width = samples.first().map_or(0, |s| s.values.len());
    let mut header = vec!["label".to_string(), "source".to_string()];
    header.extend((1..=width).map(|i| format!("v{i}")));
    w.write_record(&header)?;
    for s in samples {
        let mut record = vec![s.label.as_str().to_string(), s.source.as_str().to_string()];
        record.extend(s.values.iter().map(|v| v.to_string()));
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ChannelKind;
    use crate::seed::StreamSeeder;

    fn default_setup() -> (FrameConfig, ChannelModel) {
        (FrameConfig::default(), ChannelModel::new(ChannelKind::Awgn))
    }

    fn slot_with(truth: Occupancy, inferred: Occupancy, values: Vec<f64>) -> SlotRecord {
        SlotRecord {
            index: 0,
            truth,
            inferred,
            probe: ProbeOutcome {
                successes: 0,
                attempts: 3,
            },
            values,
        }
    }

    #[test]
    fn probe_majority_rule() {
        let of = |successes, attempts| ProbeOutcome {
            successes,
            attempts,
        };
        assert!(of(3, 3).infers_idle());
        assert!(of(2, 3).infers_idle());
        assert!(!of(1, 3).infers_idle());
        assert!(!of(0, 3).infers_idle());
        // Exactly half counts as idle.
        assert!(of(1, 2).infers_idle());
    }

    #[test]
    fn probes_collide_with_busy_incumbent() {
        let (cfg, channel) = default_setup();
        let mut rng = StreamSeeder::new(1).rng("probe");
        for _ in 0..200 {
            let outcome = simulate_probes(&cfg, &channel, Occupancy::Busy, &mut rng);
            assert_eq!(outcome.successes, 0);
            assert_eq!(outcome.attempts, 3);
        }
    }

    #[test]
    fn idle_probes_almost_always_label_idle() {
        // At threshold 5 a probe fails with probability Q(5) ~ 2.9e-7, so
        // 1000 idle slots mislabeling even once would be a ~1e-10 event.
        let (cfg, channel) = default_setup();
        let mut rng = StreamSeeder::new(2).rng("probe");
        for _ in 0..1000 {
            let outcome = simulate_probes(&cfg, &channel, Occupancy::Idle, &mut rng);
            assert!(outcome.infers_idle());
        }
    }

    #[test]
    fn build_samples_floors_per_class_pool() {
        // 6 idle + 4 busy slots at 17 values each: pools of 102 and 68
        // values make floor(102/5) = 20 and floor(68/5) = 13 samples.
        let mut slots = Vec::new();
        for i in 0..10 {
            let occ = if i < 6 { Occupancy::Idle } else { Occupancy::Busy };
            let values: Vec<f64> = (0..17).map(|j| (i * 100 + j) as f64).collect();
            slots.push(slot_with(occ, occ, values));
        }
        let samples = build_samples(&slots, 5, false);
        let idle: Vec<_> = samples.iter().filter(|s| !s.label.is_busy()).collect();
        let busy: Vec<_> = samples.iter().filter(|s| s.label.is_busy()).collect();
        assert_eq!(idle.len(), 20);
        assert_eq!(busy.len(), 13);
        assert!(samples.iter().all(|s| s.values.len() == 5));
        assert!(samples.iter().all(|s| s.source == LabelSource::ProbeInferred));
        // Pooling is in slot order: the first idle sample is the first five
        // values of slot 0, and samples may straddle slot boundaries.
        assert_eq!(idle[0].values, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(idle[3].values, vec![15.0, 16.0, 100.0, 101.0, 102.0]);
    }

    #[test]
    fn build_samples_uses_requested_label_source() {
        // One slot whose truth and inferred labels disagree.
        let slots = vec![slot_with(
            Occupancy::Busy,
            Occupancy::Idle,
            (0..17).map(f64::from).collect(),
        )];
        let by_probe = build_samples(&slots, 5, false);
        assert!(by_probe.iter().all(|s| !s.label.is_busy()));
        let by_truth = build_samples(&slots, 5, true);
        assert!(by_truth.iter().all(|s| s.label.is_busy()));
        assert!(by_truth.iter().all(|s| s.source == LabelSource::GroundTruth));
    }

    #[test]
    fn slot_value_matrix_groups_by_label() {
        let slots = vec![
            slot_with(Occupancy::Idle, Occupancy::Idle, vec![1.0; 17]),
            slot_with(Occupancy::Busy, Occupancy::Busy, vec![2.0; 17]),
            slot_with(Occupancy::Idle, Occupancy::Idle, vec![3.0; 17]),
        ];
        let idle = slot_value_matrix(&slots, Occupancy::Idle, false);
        assert_eq!(idle.dim(), (2, 17));
        assert_eq!(idle[[0, 0]], 1.0);
        assert_eq!(idle[[1, 0]], 3.0);
        let busy = slot_value_matrix(&slots, Occupancy::Busy, false);
        assert_eq!(busy.dim(), (1, 17));
    }

    #[test]
    fn metrics_from_decisions_by_hand() {
        use Occupancy::{Busy, Idle};
        let truth = [Idle, Idle, Idle, Busy, Busy, Busy, Busy];
        let decided = [Idle, Busy, Idle, Busy, Idle, Idle, Busy];
        let m = ClassifierMetrics::from_decisions(&truth, &decided).unwrap();
        assert_eq!(m.idle_total, 3);
        assert_eq!(m.busy_total, 4);
        assert!((m.false_alarm - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.misdetection - 0.5).abs() < 1e-15);
        // One false alarm and two misdetections leave 4 of 7 correct.
        assert!((m.accuracy - 4.0 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn metrics_close_back_to_integer_error_counts() {
        // Rates times class totals must recover whole error counts, and
        // accuracy must be the complementary weighted error rate.
        use rand::Rng;
        let mut rng = StreamSeeder::new(40).rng("closure");
        for _ in 0..50 {
            let len = rng.random_range(2..400);
            let truth: Vec<Occupancy> =
                (0..len).map(|_| Occupancy::draw(0.5, &mut rng)).collect();
            let decided: Vec<Occupancy> =
                (0..len).map(|_| Occupancy::draw(0.5, &mut rng)).collect();
            let Ok(m) = ClassifierMetrics::from_decisions(&truth, &decided) else {
                continue;
            };
            let fa = m.false_alarm * m.idle_total as f64;
            let md = m.misdetection * m.busy_total as f64;
            assert!((fa - fa.round()).abs() < 1e-9);
            assert!((md - md.round()).abs() < 1e-9);
            let total = (m.idle_total + m.busy_total) as f64;
            assert!((m.accuracy - (1.0 - (fa + md) / total)).abs() < 1e-12);
        }
    }

    #[test]
    fn single_class_eval_set_is_an_error() {
        let truth = [Occupancy::Idle, Occupancy::Idle];
        let decided = [Occupancy::Idle, Occupancy::Busy];
        let err = ClassifierMetrics::from_decisions(&truth, &decided).unwrap_err();
        assert!(matches!(err, Error::EmptyClass(Occupancy::Busy)));
    }

    #[test]
    fn threshold_detector_rates_match_analytic_tails() {
        // Independent check on the evaluation data itself. A detector that
        // declares busy when the sample mean exceeds 1.5 (the midpoint of
        // the class means) has known rates on the AWGN channel:
        //   p_FA = Q(1.5 / sqrt(1/5))   ~ 3.98e-4
        //   p_MD = Q(1.5 / sqrt(2/5))   ~ 8.86e-3
        let (cfg, channel) = default_setup();
        let mut rng = StreamSeeder::new(3).rng("eval");
        let per_class = 200_000;
        let (x, truth) = make_eval_set(&cfg, &channel, per_class, &mut rng);
        let decided: Vec<Occupancy> = x
            .rows()
            .into_iter()
            .map(|row| {
                if row.mean().unwrap() > 1.5 {
                    Occupancy::Busy
                } else {
                    Occupancy::Idle
                }
            })
            .collect();
        let m = ClassifierMetrics::from_decisions(&truth, &decided).unwrap();
        let p_fa_expect = crate::channel::q_function(1.5 * 5.0f64.sqrt());
        let p_md_expect = crate::channel::q_function(1.5 * (5.0f64 / 2.0).sqrt());
        assert!((p_fa_expect - 3.98e-4).abs() < 2e-5);
        assert!((p_md_expect - 8.86e-3).abs() < 2e-4);
        // 4-sigma bands at n = 200k.
        assert!(
            (m.false_alarm - p_fa_expect).abs() < 4.0 * (p_fa_expect / per_class as f64).sqrt(),
            "p_FA {} vs {p_fa_expect}",
            m.false_alarm
        );
        assert!(
            (m.misdetection - p_md_expect).abs() < 4.0 * (p_md_expect / per_class as f64).sqrt(),
            "p_MD {} vs {p_md_expect}",
            m.misdetection
        );
    }

    #[test]
    fn trained_classifier_approaches_threshold_detector() {
        // With plenty of clean training data the learned classifier should
        // land in the same error regime as the analytic detector (a few
        // percent total, not tens).
        let (cfg, channel) = default_setup();
        let seeder = StreamSeeder::new(4);
        let mut sensing = seeder.rng("sensing");
        let mut probe = seeder.rng("probe");
        let mut occ_rng = seeder.rng("occupancy");
        let slots: Vec<SlotRecord> = (0..100)
            .map(|i| {
                let truth = Occupancy::draw(cfg.busy_prob, &mut occ_rng);
                observe_learning_slot(&cfg, &channel, i, truth, 1.0, &mut sensing, &mut probe)
            })
            .collect();
        let samples = build_samples(&slots, cfg.sample_width, false);
        let clf_cfg = ClassifierConfig {
            epochs: 100,
            ..ClassifierConfig::default()
        };
        let net = train_classifier(
            &samples,
            cfg.sample_width,
            &clf_cfg,
            &mut seeder.rng("classifier"),
        )
        .unwrap();
        let (x, truth) = make_eval_set(&cfg, &channel, 4000, &mut seeder.rng("eval"));
        let m = evaluate(&net, x.view(), &truth).unwrap();
        assert!(
            m.false_alarm + m.misdetection < 0.08,
            "p_FA {} p_MD {}",
            m.false_alarm,
            m.misdetection
        );
    }

    #[test]
    fn trained_classifier_tracks_the_optimal_detector() {
        // Averaged over seeds, the learned classifier's accuracy on a
        // common evaluation set should sit within two points of the
        // analytic midpoint-threshold detector, which is optimal for two
        // Gaussians with these means.
        let (cfg, channel) = default_setup();
        let mut gaps = Vec::new();
        for seed in 0..5u64 {
            let seeder = StreamSeeder::new(50 + seed);
            let mut sensing = seeder.rng("sensing");
            let mut probe = seeder.rng("probe");
            let mut occ_rng = seeder.rng("occupancy");
            // 35 learning slots give roughly 59 samples per class, past the
            // 50-per-class regime where training is stable.
            let slots: Vec<SlotRecord> = (0..35)
                .map(|i| {
                    let truth = Occupancy::draw(cfg.busy_prob, &mut occ_rng);
                    observe_learning_slot(&cfg, &channel, i, truth, 1.0, &mut sensing, &mut probe)
                })
                .collect();
            let samples = build_samples(&slots, cfg.sample_width, false);
            let net = train_classifier(
                &samples,
                cfg.sample_width,
                &ClassifierConfig::default(),
                &mut seeder.rng("classifier"),
            )
            .unwrap();
            let (x, truth) = make_eval_set(&cfg, &channel, 5000, &mut seeder.rng("eval"));
            let learned = evaluate(&net, x.view(), &truth).unwrap();
            let by_threshold: Vec<Occupancy> = x
                .rows()
                .into_iter()
                .map(|row| {
                    if row.mean().unwrap() > 1.5 {
                        Occupancy::Busy
                    } else {
                        Occupancy::Idle
                    }
                })
                .collect();
            let oracle = ClassifierMetrics::from_decisions(&truth, &by_threshold).unwrap();
            gaps.push(oracle.accuracy - learned.accuracy);
        }
        let mean_gap = gaps.iter().sum::<f64>() / gaps.len() as f64;
        assert!(mean_gap < 0.02, "accuracy gaps {gaps:?}");
    }

    #[test]
    fn probe_labels_rarely_disagree_with_truth() {
        // Busy slots collide every probe, so they are always labeled busy;
        // idle slots mislabel only when two of three probes are lost to
        // noise, a ~2.5e-13 event at the default threshold. Expect well
        // under 0.01% disagreement across 1e5 slots.
        let (cfg, channel) = default_setup();
        let seeder = StreamSeeder::new(60);
        let mut occ_rng = seeder.rng("occupancy");
        let mut probe_rng = seeder.rng("probe");
        let slots = 100_000;
        let mislabeled = (0..slots)
            .filter(|_| {
                let truth = Occupancy::draw(cfg.busy_prob, &mut occ_rng);
                let outcome = simulate_probes(&cfg, &channel, truth, &mut probe_rng);
                outcome.inferred() != truth
            })
            .count();
        assert!(
            (mislabeled as f64) < 0.0001 * slots as f64,
            "{mislabeled} mislabeled slots"
        );
    }

    #[test]
    fn eval_set_is_deterministic_and_centered() {
        let (cfg, channel) = default_setup();
        let per_class = 2000;
        let (x1, t1) = make_eval_set(&cfg, &channel, per_class, &mut StreamSeeder::new(70).rng("eval"));
        let (x2, t2) = make_eval_set(&cfg, &channel, per_class, &mut StreamSeeder::new(70).rng("eval"));
        assert_eq!(x1, x2);
        assert_eq!(t1, t2);
        assert_eq!(x1.dim(), (2 * per_class, cfg.sample_width));
        assert_eq!(t1.iter().filter(|t| t.is_busy()).count(), per_class);
        // Idle rows are pure noise: their grand mean over 2000 * 5 values
        // sits near zero, the busy rows near the signal mean of 3.
        let idle_mean = x1.slice(ndarray::s![..per_class, ..]).mean().unwrap();
        let busy_mean = x1.slice(ndarray::s![per_class.., ..]).mean().unwrap();
        assert!(idle_mean.abs() < 0.02, "idle mean {idle_mean}");
        assert!((busy_mean - 3.0).abs() < 0.05, "busy mean {busy_mean}");
    }

    #[test]
    fn single_class_training_set_is_an_error() {
        let slots = vec![slot_with(
            Occupancy::Busy,
            Occupancy::Busy,
            (0..17).map(f64::from).collect(),
        )];
        let samples = build_samples(&slots, 5, false);
        let err = train_classifier(
            &samples,
            5,
            &ClassifierConfig::default(),
            &mut StreamSeeder::new(5).rng("classifier"),
        )
        .unwrap_err();
        assert!(matches!(err, Error::EmptyClass(Occupancy::Idle)));
    }

    #[test]
    fn samples_csv_roundtrip() {
        let samples = vec![
            LabeledSample {
                values: vec![0.25, -1.5, 3.0],
                label: Occupancy::Idle,
                source: LabelSource::ProbeInferred,
            },
            LabeledSample {
                values: vec![2.0, 2.5, 1.75],
                label: Occupancy::Busy,
                source: LabelSource::Synthetic,
            },
        ];
        let mut buf = Vec::new();
        write_samples_csv(&mut buf, &samples).unwrap();
        let mut reader = csv::Reader::from_reader(buf.as_slice());
        assert_eq!(
            reader.headers().unwrap().iter().collect::<Vec<_>>(),
            vec!["label", "source", "v1", "v2", "v3"]
        );
        let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
        assert_eq!(rows.len(), 2);
        assert_eq!(&rows[0][0], "idle");
        assert_eq!(&rows[1][1], "synthetic");
        assert_eq!(rows[1][2].parse::<f64>().unwrap(), 2.0);
    }
}
