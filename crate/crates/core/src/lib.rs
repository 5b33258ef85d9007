//! Global interval abstractions of feedforward ReLU networks.
//!
//! [`GinnacerAbstraction`] replaces each ReLU layer by an interval map that
//! uses fewer ReLUs, contains the network output for every input, and is
//! exact at a chosen centroid input. [`MergeBaseline`] is a centroid-agnostic
//! merge abstraction for comparison, and [`bench`] measures both.

pub mod abstraction;
pub mod baseline;
pub mod bench;
pub mod error;
pub mod icf;
pub mod interval;
pub mod linalg;
pub mod network;
pub mod partition;

pub use abstraction::{
    load_abstraction, save_abstraction, BuildOptions, GinnacerAbstraction, LayerAbstraction, LayerReluStats, ReluStats,
};
pub use baseline::{load_baseline, save_baseline, MergeBaseline};
pub use error::{Error, Result};
pub use icf::NegInput;
pub use interval::{affine_interval_map, IntervalVector};
pub use linalg::Matrix;
pub use network::{load_network, random_network, save_network, Layer, Network};
pub use partition::{valid_partition, Partition};
