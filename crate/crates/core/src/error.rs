use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension too small: {dim} (need at least {min})")]
    DimensionTooSmall { dim: usize, min: usize },

    #[error("degeneracy m = {m} must be at least 1 and below the truncation dimension {dim}")]
    InvalidDegeneracy { m: usize, dim: usize },

    #[error("generator is not anti-hermitian (max |G + G†| = {deviation:e})")]
    NotAntiHermitian { deviation: f64 },

    #[error("matrix shape mismatch: expected {expected:?}, got {actual:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        actual: (usize, usize),
    },

    #[error("too close to removable singularity for this step (|z| = {modulus:e}, h = {step:e})")]
    NearSingularity { modulus: f64, step: f64 },

    #[error("finite-difference step {0:e} outside [1e-8, 1e-2]")]
    InvalidStep(f64),

    #[error("non-finite parameter value")]
    NonFinite,

    #[error("path is not closed (endpoint gap {gap:e})")]
    OpenPath { gap: f64 },

    #[error("path segments are not contiguous at segment {index} (gap {gap:e})")]
    DiscontinuousPath { index: usize, gap: f64 },

    #[error("path has no segments")]
    EmptyPath,

    #[error("{0} requires at least {1} sample(s)")]
    NotEnoughSamples(&'static str, usize),

    #[error("dimension list must be ascending with every entry >= {min}")]
    InvalidDimensionList { min: usize },

    #[error("expected {expected} parameters, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("Lie closure did not stabilize within {budget} iterations (partial dimension {partial})")]
    NotStabilized { budget: usize, partial: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
