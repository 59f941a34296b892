//! Numerical core of the stochastic KdV soliton laboratory.
//!
//! Original-frame and frozen-frame solvers for the KdV equation with scalar or
//! space-time white multiplicative noise, the modulation functionals that keep
//! the perturbation orthogonal to the soliton, phase fitting, and the
//! order-0/1/2 approximations of amplitude and phase shift.

pub mod approx;
pub mod banded;
pub mod direct;
pub mod error;
pub mod frozen;
pub mod grid;
pub mod kmatrix;
pub mod modulation;
pub mod noise;
pub mod phase_fit;
pub mod propagator;
pub mod scalar;
pub mod soliton;

pub use error::{KdvError, Result};
