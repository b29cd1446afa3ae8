//! Gaussian observables on bosonic phase space: validity, canonical
//! block structure, minimal Naimark extensions, outcome statistics and a
//! truncated Fock-space oracle.

pub mod error;
pub mod fock;
pub mod linalg;
pub mod naimark;
pub mod observable;
pub mod statistics;
pub mod symplectic;
pub mod testkit;

pub use error::{Error, Result};
pub use linalg::{CMat, RMat, RVec};
pub use naimark::{
    characteristic_check, extend, hybrid_ancilla_dims, verify, NaimarkExtension, Residuals,
};
pub use observable::{
    classify, density_norm, validate, Classification, DensityNorm, GaussianObservable,
    ValidityReport, DEFAULT_TOL,
};
pub use statistics::{
    outcome_distribution, sample, state_characteristic_value, GaussianState, OutcomeDistribution,
};
pub use symplectic::{extended_williamson, CanonicalDecomposition, SubspaceBasis, SymplecticForm};
