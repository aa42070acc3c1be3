use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("rejected input: {0}")]
    InvalidInput(String),

    #[error("outside the admissible domain: {0}")]
    Domain(String),

    #[error("non-finite evaluation at probe point {point:?}")]
    NonFinite { point: Vec<f64> },

    #[error("symmetry defect {defect:e} exceeds tolerance {tolerance:e}")]
    NotSymmetric { defect: f64, tolerance: f64 },

    #[error("singular pencil: |det B| = {det:e} is below the floor {floor:e}")]
    SingularPencil { det: f64, floor: f64 },

    #[error("hyperbolicity failure: {0}")]
    Hyperbolicity(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    Bracket { what: String, lo: f64, hi: f64 },

    #[error("Newton iteration failed: {0}")]
    Newton(String),

    #[error("no connection found: {reason}")]
    NoConnection {
        reason: String,
        escape: Option<Vec<f64>>,
    },

    #[error("singular dissipation symbol at {location:?}; try a perturbed (lambda, mu, nu)")]
    SingularSymbol { location: Vec<f64> },

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;
