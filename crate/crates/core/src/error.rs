use thiserror::Error;

/// Failures raised by the numerical kernels and the iteration engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not symmetric (max |a_ij - a_ji| = {max_asymmetry:e})")]
    NotSymmetric { max_asymmetry: f64 },

    #[error("Jacobi iteration did not converge within {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("vector is not normalized (norm = {norm})")]
    NotNormalized { norm: f64 },

    #[error("degenerate projected variance ({value:e})")]
    DegenerateVariance { value: f64 },

    #[error("{samples} samples are not enough for dimension {dim}")]
    InsufficientData { samples: usize, dim: usize },

    #[error("sample covariance is singular")]
    SingularCovariance,

    #[error("negative discriminant {delta:e}: eigenvalues are complex")]
    NegativeDiscriminant { delta: f64 },

    #[error("initial vector is not in the invariant subspace (|<v1, theta>| = {projection:e})")]
    NotInH { projection: f64 },

    #[error("conditions violated: {0}")]
    ConditionsViolated(String),

    #[error("state left the unit cube at step {step}, site {site}: {value}")]
    StateOutOfRange {
        step: usize,
        site: usize,
        value: f64,
    },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
