//! Streaming subsequence matching with dynamic z-normalization.

pub mod dtw;
pub mod engine;
pub mod error;
pub mod baseline;
pub mod cli;
pub mod eval;
pub mod prefix_norm;
pub mod synth;

pub use error::{Error, Result};
pub use prefix_norm::PreparedQuery;
