use thiserror::Error;

use crate::tentacular::ValidationReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification used by the command line front end to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Malformed or out-of-contract input.
    Input,
    /// The numerics could not resolve the requested structure.
    Numerical,
    /// Two routes that must agree did not.
    Internal,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("matrix has a non-finite entry")]
    NonFinite,
    #[error("matrix dimension {0} is not even")]
    OddDimension(usize),
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e}, allowed {allowed:e})")]
    NotSymmetric { asymmetry: f64, allowed: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid tolerances: {0}")]
    InvalidTolerances(String),
    #[error("eigenvalue solver returned a non-finite value")]
    EigenSolverFailed,
    #[error("eigenvalue clusters overlap; Jordan data is not numerically resolvable")]
    ClusterAmbiguous,
    #[error("restricted quadratic form is degenerate (smallest |eigenvalue| {smallest:e})")]
    DegenerateRestriction { smallest: f64 },
    #[error("eigenvalue {lambda} is incompatible with a block of kind {kind}")]
    IncompatibleEigenvalue { kind: char, lambda: num_complex::Complex64 },
    #[error("block of kind {kind}, m={m}: formula signature {formula:?} but numerical {numerical:?}")]
    SignatureMismatch { kind: char, m: usize, formula: (usize, usize), numerical: (usize, usize) },
    #[error("matrix is singular")]
    DegenerateInput,
    #[error("Krein sign of purely imaginary eigenvalue {lambda} with Jordan block of size {m} is not determined")]
    GammaUndetermined { lambda: num_complex::Complex64, m: usize },
    #[error("spectrum of JA is not symmetric under negation and conjugation")]
    SpectrumAsymmetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("period {eta} is not a critical value")]
    NotCritical { eta: f64 },
    #[error("resonance count {analytic} disagrees with numerical half-kernel {numerical} at period {eta}")]
    ResonanceMismatch { eta: f64, analytic: usize, numerical: usize },
    #[error("action window contains more than {cap} critical values")]
    CensusTooLarge { cap: usize },
    #[error("invalid action window [{lo}, {hi}]")]
    InvalidWindow { lo: f64, hi: f64 },
    #[error("crossing form at t={t} is degenerate")]
    CrossingDegenerate { t: f64 },
    #[error("transverse index is not defined for the constant family (eta = 0)")]
    ZeroEta,
    #[error("hyperbolic part contributes index {0}, expected 0")]
    HyperbolicIndexNonzero(String),
    #[error("formula yields the non-integer value {0}/2")]
    NonIntegerResult(i64),
    #[error("exact sequence is underdetermined")]
    Underdetermined,
    #[error("exact sequence constraints are inconsistent")]
    Inconsistent,
    #[error("Hamiltonian fails validation: {0}")]
    InvalidHamiltonian(Box<ValidationReport>),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            NotSquare { .. }
            | OddDimension(_)
            | NonFinite
            | InvalidInput(_)
            | NotSymmetric { .. }
            | DimensionMismatch(_)
            | InvalidTolerances(_)
            | IncompatibleEigenvalue { .. }
            | DegenerateInput
            | NotPositiveDefinite
            | NotCritical { .. }
            | InvalidWindow { .. }
            | ZeroEta
            | CensusTooLarge { .. }
            | InvalidHamiltonian(_) => ErrorClass::Input,
            ClusterAmbiguous
            | EigenSolverFailed
            | DegenerateRestriction { .. }
            | GammaUndetermined { .. }
            | CrossingDegenerate { .. } => ErrorClass::Numerical,
            SignatureMismatch { .. }
            | SpectrumAsymmetric
            | ResonanceMismatch { .. }
            | HyperbolicIndexNonzero(_)
            | NonIntegerResult(_)
            | Underdetermined
            | Inconsistent => ErrorClass::Internal,
        }
    }
}
