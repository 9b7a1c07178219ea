use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("branch set is empty")]
    EmptyBranchSet,

    #[error("duplicate branch label `{0}`")]
    DuplicateLabel(String),

    #[error("branch amplitudes not normalized: sum |a|^2 = {norm} (tolerance {tolerance:e})")]
    NotNormalized { norm: f64, tolerance: f64 },

    #[error("length mismatch: expected {expected} entries, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("projection is not unitary: deviation {deviation:e}")]
    NonUnitary { deviation: f64 },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("non-finite value encountered in {context} at index {index}")]
    NonFinite { context: &'static str, index: usize },

    #[error("norm drifted by {drift:e} at step {step}")]
    NormDrift { step: usize, drift: f64 },

    #[error("phase undefined at nodal point x = {x}")]
    Node { x: f64 },
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}
