//! Frame protocol constants.
//!
//! Time is measured in abstract units. A frame of `frame_len` units is cut
//! into slots of `slot_len` units, and every slot is spent either learning
//! or transmitting:
//!
//! - Learning slot: the first `floor(slot_len * sensing_fraction)` units
//!   sense the channel (one value per unit); the remaining units send probe
//!   transmissions whose success or failure labels the slot.
//! - Transmission slot: the first `sample_width` units sense the channel to
//!   form one classifier input; the remaining units carry payload if the
//!   classifier declares the incumbent idle.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FrameConfig {
    /// Frame length in time units (`T`).
    pub frame_len: usize,
    /// Slot length in time units (`S`). Must divide `frame_len`.
    pub slot_len: usize,
    /// Sensed values per classifier input (`F`). Also the sensing time at
    /// the head of each transmission slot.
    pub sample_width: usize,
    /// Fraction of a learning slot spent sensing (`p_s`); the rest probes.
    pub sensing_fraction: f64,
    /// Probability that the incumbent occupies a given slot (`p_B`).
    pub busy_prob: f64,
    /// Receiver noise threshold (`tau`). A transmission unit whose noise
    /// draw exceeds this is corrupted. `f64::INFINITY` disables noise loss.
    pub noise_threshold: f64,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            frame_len: 20_000,
            slot_len: 20,
            sample_width: 5,
            sensing_fraction: 0.85,
            busy_prob: 0.5,
            noise_threshold: 5.0,
        }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.slot_len == 0 {
            return fail("slot_len must be positive".into());
        }
        if self.frame_len == 0 || self.frame_len % self.slot_len != 0 {
            return fail(format!(
                "frame_len ({}) must be a positive multiple of slot_len ({})",
                self.frame_len, self.slot_len
            ));
        }
        if self.sample_width == 0 || self.sample_width >= self.slot_len {
            return fail(format!(
                "sample_width ({}) must be in 1..slot_len ({}) so transmission slots \
                 keep at least one payload unit",
                self.sample_width, self.slot_len
            ));
        }
        if !(self.sensing_fraction > 0.0 && self.sensing_fraction < 1.0) {
            return fail(format!(
                "sensing_fraction ({}) must be in (0, 1)",
                self.sensing_fraction
            ));
        }
        if self.sensing_values_per_slot() == 0 {
            return fail("sensing_fraction leaves no sensing units in a learning slot".into());
        }
        if self.sensing_values_per_slot() < self.sample_width {
            return fail(format!(
                "a learning slot senses {} values, fewer than the sample width {}; \
                 no single slot could ever fill one sample",
                self.sensing_values_per_slot(),
                self.sample_width
            ));
        }
        // sensing_fraction < 1 already guarantees at least one probe unit,
        // but keep the check: it is the property the labeling step relies on.
        if self.probe_units_per_slot() == 0 {
            return fail("sensing_fraction leaves no probe units in a learning slot".into());
        }
        if !(0.0..=1.0).contains(&self.busy_prob) {
            return fail(format!("busy_prob ({}) must be in [0, 1]", self.busy_prob));
        }
        if !(self.noise_threshold > 0.0) {
            return fail(format!(
                "noise_threshold ({}) must be positive",
                self.noise_threshold
            ));
        }
        Ok(())
    }

    pub fn slots_per_frame(&self) -> usize {
        self.frame_len / self.slot_len
    }

    /// Sensed values collected in one learning slot: `floor(S * p_s)`.
    pub fn sensing_values_per_slot(&self) -> usize {
        (self.slot_len as f64 * self.sensing_fraction).floor() as usize
    }

    /// Probe transmission units at the tail of a learning slot.
    pub fn probe_units_per_slot(&self) -> usize {
        self.slot_len - self.sensing_values_per_slot()
    }

    /// Payload units at the tail of a transmission slot (`S - F`).
    pub fn payload_units_per_slot(&self) -> usize {
        self.slot_len - self.sample_width
    }

    /// Classifier samples one learning slot contributes, if every value in
    /// it went to the same class: `floor(S * p_s) / F` after pooling.
    pub fn max_samples_per_slot(&self) -> usize {
        self.sensing_values_per_slot() / self.sample_width
    }
}
