use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not anti-Hermitian (defect {defect:.3e} > tolerance {tolerance:.3e})")]
    NotAntiHermitian { defect: f64, tolerance: f64 },

    #[error("matrix is not traceless (|tr| = {defect:.3e} > tolerance {tolerance:.3e})")]
    NotTraceless { defect: f64, tolerance: f64 },

    #[error("index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("variation does not vanish at t = 1 (|u(1)| = {0:.3e}); an endpoint-free direction is required")]
    NotEndpointFree(f64),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("unitarity drift {drift:.3e} exceeds bound {bound:.3e} at M = {cells}; refine the curve grid")]
    Drift { drift: f64, bound: f64, cells: usize },

    #[error("series did not converge: {0}")]
    NonConvergence(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalog(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("report error: {0}")]
    Report(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
