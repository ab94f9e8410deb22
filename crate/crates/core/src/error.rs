//! Error type shared across the simulation crates.

use crate::channel::Occupancy;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of range or inconsistent with the rest
    /// of the configuration (for example a sensing fraction that leaves no
    /// room for probe transmissions in a learning slot).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// Training data dimensions do not match what the network expects.
    #[error("shape mismatch in {context}: expected {expected}, got {got}")]
    ShapeMismatch {
        context: &'static str,
        expected: String,
        got: String,
    },

    /// A learning phase produced no samples for one of the occupancy
    /// classes, so neither the classifier nor a per-class generator can be
    /// trained. Happens with very short learning phases when every probe
    /// round lands on the same occupancy state.
    #[error("learning phase produced no {0:?} samples; cannot train")]
    EmptyClass(Occupancy),

    /// A serialized model dump could not be parsed.
    #[error("malformed model dump: {0}")]
    ModelParse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
