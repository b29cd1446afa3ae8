use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("empty system: mode count must be at least 1")]
    EmptySystem,

    #[error("shape mismatch for {what}: expected {expected}, found {found}")]
    Shape {
        what: &'static str,
        expected: String,
        found: String,
    },

    #[error("{what} is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { what: &'static str, asymmetry: f64 },

    #[error("{what} is not skew-symmetric (max |D + D^t| = {asymmetry:e})")]
    NotSkew { what: &'static str, asymmetry: f64 },

    #[error("K is not column-independent (smallest relative singular value {relative_sv:e}); use reduce_columns")]
    RankDeficientK { relative_sv: f64 },

    #[error("uncertainty condition violated: min eigenvalue of alpha + (i/2) Delta_K is {min_eigenvalue:e}")]
    Invalid { min_eigenvalue: f64 },

    #[error("not a Gaussian state covariance: min eigenvalue of gamma + (i/2) Delta is {min_eigenvalue:e}")]
    InvalidState { min_eigenvalue: f64 },

    #[error("covariance is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },

    #[error("subspace vectors are linearly dependent (smallest singular value {smallest_sv:e})")]
    DependentVectors { smallest_sv: f64 },

    #[error("cannot build isotropic partner: {0}")]
    InfeasibleComplement(String),

    #[error("observable is {found}, operation requires {expected}")]
    WrongType {
        expected: &'static str,
        found: String,
    },

    #[error("{what} residual {residual:e} exceeds tolerance {tol:e}")]
    Residual {
        what: &'static str,
        residual: f64,
        tol: f64,
    },

    #[error("Fock oracle: {0}")]
    Oracle(String),
}
