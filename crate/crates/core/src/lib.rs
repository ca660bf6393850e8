//! Variable-length sequence classification with packed LSTM batches.
//!
//! Per-frame feature vectors for each video are sorted by length, packed so
//! that no arithmetic touches padding, run through a single-layer LSTM and an
//! affine head, and the per-frame softmax outputs are aggregated into one
//! video-level decision.

pub mod classifier;
pub mod cli;
pub mod data_io;
pub mod error;
pub mod lstm;
pub mod metrics;
pub mod numeric;
pub mod packed;
pub mod selfcheck;
pub mod training;

pub use error::{Error, Result};
