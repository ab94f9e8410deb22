//! Incumbent occupancy and the sensed-value channel models.
//!
//! The opportunistic receiver samples the band once per time unit and gets
//! a scalar. When the incumbent is silent that scalar is pure receiver
//! noise `w ~ N(0, 1)`. When the incumbent transmits, its signal arrives as
//! a Gaussian `s ~ N(3, 1)` either directly (AWGN channel, sensed value
//! `s + w`) or through a flat Rayleigh fade (sensed value `h*s + w` with
//! `h` Rayleigh-distributed, unit mean square). The fade is constant over a
//! coherence interval, one slot or one frame, chosen by the caller, which
//! redraws the gain at the interval boundary and passes it to every
//! [`ChannelModel::sense`] call inside it.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

/// Whether the incumbent occupies a slot. Occupancy is drawn independently
/// per slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Occupancy {
    Idle,
    Busy,
}

impl Occupancy {
    pub fn draw(busy_prob: f64, rng: &mut ChaCha8Rng) -> Self {
        if rng.random::<f64>() < busy_prob {
            Occupancy::Busy
        } else {
            Occupancy::Idle
        }
    }

    pub fn is_busy(self) -> bool {
        matches!(self, Occupancy::Busy)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Occupancy::Idle => "idle",
            Occupancy::Busy => "busy",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChannelKind {
    Awgn,
    Rayleigh,
}

impl ChannelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::Awgn => "awgn",
            ChannelKind::Rayleigh => "rayleigh",
        }
    }
}

/// How long one Rayleigh gain stays valid. Ignored for AWGN.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FadingGranularity {
    /// Redraw the gain at every slot boundary (default).
    PerSlot,
    /// One gain for the whole frame (quasi-static).
    PerFrame,
}

/// Rayleigh scale giving unit mean-square gain: `E[h^2] = 2*sigma^2 = 1`.
const RAYLEIGH_SIGMA: f64 = std::f64::consts::FRAC_1_SQRT_2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    /// Mean of the incumbent signal as seen without fading.
    pub signal_mean: f64,
    /// Standard deviation of the incumbent signal.
    pub signal_std: f64,
    /// Standard deviation of the receiver noise.
    pub noise_std: f64,
}

impl ChannelModel {
    pub fn new(kind: ChannelKind) -> Self {
        Self {
            kind,
            signal_mean: 3.0,
            signal_std: 1.0,
            noise_std: 1.0,
        }
    }

    /// Gain for the next coherence interval: 1 for AWGN, a Rayleigh draw
    /// otherwise. Sampled by inverse CDF so it costs exactly one uniform,
    /// which keeps stream consumption predictable for reproducibility.
    pub fn draw_gain(&self, rng: &mut ChaCha8Rng) -> f64 {
        match self.kind {
            ChannelKind::Awgn => 1.0,
            ChannelKind::Rayleigh => {
                let u: f64 = rng.random();
                RAYLEIGH_SIGMA * (-2.0 * (1.0 - u).ln()).sqrt()
            }
        }
    }

    /// One sensed value under the given occupancy and current gain.
    pub fn sense(&self, occ: Occupancy, gain: f64, rng: &mut ChaCha8Rng) -> f64 {
        let noise = Normal::new(0.0, self.noise_std).unwrap().sample(rng);
        match occ {
            Occupancy::Idle => noise,
            Occupancy::Busy => {
                let signal = Normal::new(self.signal_mean, self.signal_std)
                    .unwrap()
                    .sample(rng);
                gain * signal + noise
            }
        }
    }

    /// Whether a burst of `units` transmission units is lost to noise.
    /// The burst is all-or-nothing: one noise draw above the threshold
    /// corrupts the whole slot's payload.
    pub fn burst_noise_failure(
        &self,
        units: usize,
        threshold: f64,
        rng: &mut ChaCha8Rng,
    ) -> bool {
        let noise = Normal::new(0.0, self.noise_std).unwrap();
        (0..units).any(|_| noise.sample(rng) > threshold)
    }
}

/// Upper tail of the standard normal, `Q(x) = P(N(0,1) > x)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Probability that a burst of `units` transmission units is lost to noise:
/// `1 - (1 - Q(threshold/noise_std))^units`.
pub fn burst_noise_failure_prob(units: usize, threshold: f64, noise_std: f64) -> f64 {
    let per_unit = q_function(threshold / noise_std);
    1.0 - (1.0 - per_unit).powi(units as i32)
}
