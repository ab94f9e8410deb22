//! Core engine for a time-slotted spectrum-coexistence simulator.
//!
//! An opportunistic user shares a band with an incumbent whose occupancy it
//! cannot observe directly. Each frame is split into slots; a slot is spent
//! either learning (sensing the channel and training a classifier on the
//! collected values) or transmitting (sensing, classifying, and sending data
//! when the classifier says the incumbent is idle). Longer learning phases
//! buy classification accuracy at the price of transmission opportunities;
//! this crate provides the pieces needed to quantify that tradeoff, plus a
//! GAN-based augmenter that stretches a short learning phase with synthetic
//! sensing data.
//!
//! Module map:
//! - [`channel`]: incumbent occupancy, AWGN and Rayleigh-faded signal models,
//!   noise-threshold transmission failures.
//! - [`nn`]: a small dense neural network (the only learner in the system),
//!   with ReLU/sigmoid/softmax layers, dropout, cross-entropy losses, and
//!   RMSprop/Adam optimizers.
//! - [`sensing`]: turning sensed values into labeled training samples via
//!   probe transmissions, training the occupancy classifier, and measuring
//!   false-alarm/misdetection rates.
//! - [`gan`]: per-class generative models trained on real sensing samples,
//!   used to synthesize additional training data.
//! - [`frame`]: the frame protocol tying everything together, producing
//!   analytic and empirical throughput for a configured learning length.

pub mod channel;
pub mod config;
pub mod error;
pub mod frame;
pub mod gan;
pub mod nn;
pub mod seed;
pub mod sensing;

pub use config::FrameConfig;
pub use error::{Error, Result};
