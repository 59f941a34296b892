//! Ensemble laboratory for the stochastic KdV soliton: run configuration,
//! parallel Monte Carlo over independent noise streams, streaming statistics,
//! order fits, and the CSV/JSON artifacts.

pub mod config;
pub mod ensemble;
pub mod error;
pub mod fit;
pub mod output;
pub mod stats;

pub use error::{LabError, Result};
