use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spectral parameter {z} is too close to a vertex eigenvalue (|W| = {wronskian:.3e})")]
    NearEigenvalue { z: Complex64, wronskian: f64 },

    #[error("coupling system is singular (|det| = {det:.3e})")]
    SingularSystem { det: f64 },

    #[error("integrator step underflow at s = {s} for z = {z}")]
    IntegratorFailure { z: Complex64, s: f64 },

    #[error("root search failed: {0}")]
    RootNotFound(String),

    #[error("quadrature did not converge (estimated error {achieved:.3e})")]
    Quadrature { achieved: f64 },

    #[error("case mismatch: {0}")]
    CaseMismatch(String),

    #[error("insufficient points for a slope fit: {got} usable, need {need}")]
    InsufficientPoints { got: usize, need: usize },

    #[error("linear solve failed: {0}")]
    Solver(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for errors caused by the caller's input rather than by numerics.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidInput(_) | Error::CaseMismatch(_) | Error::Json(_)
        )
    }
}
