use thiserror::Error;

pub type Result<T, E = BwError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum BwError {
    #[error("matrix is not symmetric (max |m_ij - m_ji| = {max_asymmetry:e})")]
    SymmetryViolation { max_asymmetry: f64 },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("non-finite value in {what}")]
    NonFinite { what: &'static str },

    #[error(
        "matrix is not positive semi-definite (eigenvalue {min_eigenvalue:e} below -{threshold:e})"
    )]
    NotPsd { min_eigenvalue: f64, threshold: f64 },

    #[error("dimension mismatch in {what}: {left} vs {right}")]
    DimensionMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("graph is disconnected ({zero_eigs} zero Laplacian eigenvalues); set a positive nu to regularize")]
    DisconnectedGraph { zero_eigs: usize },

    #[error("feature covariance is singular: nu = 0 on a disconnected graph")]
    SingularCovariance,

    #[error("time {t} is too close to 1 for a 1/(1-t) velocity")]
    TimeSingularity { t: f64 },

    #[error("time {t} outside [0, 1]")]
    TimeOutOfRange { t: f64 },

    #[error("finite-difference step h = {h} at t = {t} leaves [0, 1]")]
    StepOutOfRange { t: f64, h: f64 },

    #[error("non-finite velocity at t = {t}")]
    NonFiniteVelocity { t: f64 },

    #[error("parameter mismatch: {0}")]
    ParameterMismatch(String),

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("empty input set: {0}")]
    EmptySet(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
}

impl BwError {
    /// True for violations of a mathematical precondition (as opposed to
    /// malformed input or configuration).
    pub fn is_precondition_violation(&self) -> bool {
        matches!(
            self,
            BwError::NotPsd { .. }
                | BwError::DisconnectedGraph { .. }
                | BwError::SingularCovariance
                | BwError::TimeSingularity { .. }
                | BwError::NonFiniteVelocity { .. }
        )
    }
}
