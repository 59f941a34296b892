use thiserror::Error;

/// Failures raised by the solvers and functionals.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdvError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("projection matrix is near-singular: |det K(v)| = {det:.3e} below threshold {threshold:.3e}")]
    SingularK { det: f64, threshold: f64 },
    #[error("non-finite state at step {step} (t = {t})")]
    BlowUp { step: usize, t: f64 },
    #[error("frame collapse: alpha = {alpha:.3e} at step {step} (t = {t})")]
    FrameCollapse { alpha: f64, step: usize, t: f64 },
    #[error("linear solver failure: {0}")]
    Solver(String),
    #[error("phase fit did not converge after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

pub type Result<T> = std::result::Result<T, KdvError>;
