//! Error type shared by every module of the crate.

use std::path::PathBuf;

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("failed to access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("failed to parse {what}: {source}")]
    Parse {
        what: String,
        #[source]
        source: serde_json::Error,
    },

    /// Shape disagreement. `context` names the operand (and layer, when known).
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: String,
        expected: usize,
        found: usize,
    },

    /// Layers are numbered from 1 in messages.
    #[error("layer {layer}: non-finite value in {what}")]
    NonFinite { layer: usize, what: &'static str },

    #[error("invalid network: {0}")]
    InvalidNetwork(String),

    #[error("invalid interval at index {index}: lower {lower} > upper {upper}")]
    InvalidInterval { index: usize, lower: f64, upper: f64 },

    #[error("neuron group is empty")]
    EmptyGroup,

    #[error("neuron index {index} out of range for a layer of {len} neurons")]
    IndexOutOfRange { index: usize, len: usize },

    /// A singleton neuron has positive potential at the centroid, so the
    /// layer handed to the partitioner was not in inactive canonical form.
    #[error("layer is not in inactive canonical form: neuron {neuron} has potential {potential} > 0 at the centroid")]
    NotCanonical { neuron: usize, potential: f64 },

    #[error("partition invariant violated: {0}")]
    InvalidPartition(String),

    #[error("skip_layers = {skip} exceeds the {relu_layers} ReLU layers of the network")]
    SkipOutOfRange { skip: usize, relu_layers: usize },

    #[error("delta must be positive and finite, got {0}")]
    InvalidDelta(f64),

    #[error("invalid merge target {target} for layer {layer}")]
    InvalidTarget { layer: usize, target: usize },

    #[error("invalid abstraction: {0}")]
    InvalidAbstraction(String),

    #[error("invalid benchmark configuration: {0}")]
    InvalidConfig(String),

    #[error("CSV output failed: {0}")]
    Csv(#[from] csv::Error),
}

pub(crate) fn check_len(context: impl Into<String>, expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            context: context.into(),
            expected,
            found,
        })
    }
}
