//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// The curve `(e^λ − 1)·φ(t) + 1` came within `min_modulus` of zero, so no
    /// continuous logarithm can be tracked past this point. Estimators fall
    /// back to the zero function when they see this.
    #[error("curve modulus {modulus:.3e} below {min_modulus:.3e} at t = {t}")]
    ZeroPath {
        t: f64,
        modulus: f64,
        min_modulus: f64,
    },

    /// A phase increment between adjacent grid points exceeded π/2, so branch
    /// continuity cannot be certified. The caller must refine the grid.
    #[error("phase step {step:.4} rad at t = {t} exceeds π/2; refine the frequency grid")]
    GridTooCoarse { t: f64, step: f64 },

    /// The sampler hit its draw cap without collecting the requested number of
    /// nonzero observations.
    #[error("draw cap {cap} reached before collecting {requested} nonzero observations")]
    DegenerateModel { requested: usize, cap: u64 },

    /// The operation needs closed-form convolution powers, which only the
    /// built-in jump densities provide.
    #[error("operation requires a built-in jump density: {0}")]
    UnsupportedJumpSpec(&'static str),

    #[error("sample is empty")]
    EmptySample,

    #[error("sample is degenerate: {0}")]
    DegenerateSample(String),

    #[error("quadrature did not converge after {refinements} refinements (last change {last_change:.3e})")]
    QuadratureNonConvergence { refinements: u32, last_change: f64 },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("parse error in {path}: {message}")]
    Parse { path: String, message: String },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
