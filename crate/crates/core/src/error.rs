use thiserror::Error;

/// Errors raised by the numerical and arithmetic routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not in SL2(R): determinant {det}")]
    NotSpecialLinear { det: f64 },

    #[error("degenerate geodesic: {0}")]
    DegenerateGeodesic(String),

    #[error("parabolic element: |trace| = 2")]
    Parabolic,

    #[error("spectral parameter {re} + {im}i is outside R and iR")]
    NotAdmissible { re: f64, im: f64 },

    #[error("quadrature did not converge ({context}): achieved error {achieved:e}")]
    QuadratureNonConvergence { context: &'static str, achieved: f64 },

    #[error("insufficient decay: tail bound {bound:e} exceeds {target:e}")]
    InsufficientDecay { bound: f64, target: f64 },

    #[error("certification failed: {0}")]
    Certification(String),

    #[error("factorization of {0} exceeds the trial-division and rho limit")]
    FactorizationLimit(u64),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("quaternion algebra ({a}, {b}) is split")]
    SplitAlgebra { a: i64, b: i64 },

    #[error("n = {n} is not coprime to the conductor {conductor}")]
    NotCoprime { n: u64, conductor: u64 },

    #[error("integer overflow in {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;
