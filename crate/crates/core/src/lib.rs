//! Dual-clustering graph convolutional classification of hyperspectral images.
//!
//! The pipeline clusters pixels into superpixels, links each superpixel to its
//! spectrally closest neighbours over several hop scales, partitions the
//! resulting graph into balanced clusters and trains a shared two-layer GCN
//! by sampling one cluster sub-graph per optimisation step.
//!
//! Everything here is pure computation over in-memory buffers and builds
//! without `std`; file formats, the manifest and the command line live in
//! the companion `hgc` crate.

#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod config;
pub mod cube;
pub mod gcn;
pub mod graph;
pub mod linalg;
pub mod metrics;
pub mod partition;
pub mod pca;
pub mod pipeline;
pub mod split;
pub mod superpixel;
pub mod synthetic;
pub mod trainer;

pub use config::RunConfig;
pub use cube::{HsiCube, LabelMap};
pub use error::{Error, Result};
pub use linalg::Matrix;
