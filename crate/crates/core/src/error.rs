use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("atom cap exceeded: {needed} atoms needed, cap is {cap}")]
    AtomCap { needed: usize, cap: usize },

    #[error("volume cap exceeded: volume {volume} exceeds cap {cap}")]
    VolumeCap { volume: u128, cap: u128 },

    #[error("coordinate index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error(
        "quadrature tolerance {tol:e} unreachable within {panels} panels (reached {reached:e})"
    )]
    ToleranceUnreachable {
        tol: f64,
        reached: f64,
        panels: usize,
    },

    #[error("support is not on a common scaled integer lattice")]
    NonLattice,

    #[error("no evaluation path applicable: {0}")]
    NoPath(String),

    #[error("rational reconstruction exceeded denominator cap {0}")]
    RationalityCap(i64),

    #[error("unbounded convex body")]
    UnboundedBody,

    #[error("properization failed after {0} retries")]
    Properize(usize),

    #[error("empty record class `{0}`")]
    EmptyClass(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// Errors that mean "the instance is too large for this path".
    pub fn is_cap(&self) -> bool {
        matches!(
            self,
            Error::AtomCap { .. }
                | Error::VolumeCap { .. }
                | Error::ToleranceUnreachable { .. }
                | Error::RationalityCap(_)
        )
    }
}
