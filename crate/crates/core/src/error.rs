use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian (asymmetry {asymmetry:.3e} exceeds tolerance)")]
    NotHermitian { asymmetry: f64 },

    #[error("matrix has a negative eigenvalue {eigenvalue:.3e}")]
    NotPositive { eigenvalue: f64 },

    #[error("density matrix is singular or nearly so (smallest eigenvalue {min_eigenvalue:.3e})")]
    SingularState { min_eigenvalue: f64 },

    #[error("matrix is singular: {0}")]
    Singular(&'static str),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("parameter point outside the model domain: {0}")]
    Domain(String),

    #[error("state has a degenerate spectrum (gap {gap:.3e})")]
    DegenerateSpectrum { gap: f64 },

    #[error("extension is not closed under the D map (residual {residual:.3e})")]
    NotClosed { residual: f64 },

    #[error("SLD operators are linearly dependent")]
    RankDeficient,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
