use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("invalid input: {0}")]
    Validation(String),
    #[error("regression fit failed: {0}")]
    Fit(String),
    #[error("calibration failed: {0}")]
    Calibration(String),
    #[error("tuning failed: {0}")]
    Tuning(String),
    #[error("progressive hedging failed in scenario {scenario}: {message}")]
    Iterate { scenario: usize, message: String },
    #[error(transparent)]
    Solver(#[from] lin_solver::SolverError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Serde(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
