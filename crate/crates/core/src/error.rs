use thiserror::Error;

/// Errors raised by the lattice estimators and predictors.
///
/// Variants split into validation failures (bad input or configuration) and
/// numerical failures (singular systems, poles, overflow); see
/// [`Error::is_numerical`].
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid dimensions: {0}")]
    InvalidDims(String),

    #[error("invalid window: {0}")]
    InvalidWindow(String),

    #[error("invalid bandwidth: {0}")]
    InvalidBandwidth(String),

    #[error("lattice has {count} unobserved cell(s) in the estimation region")]
    MaskedCells { count: usize },

    #[error("no observed cells")]
    NoObservations,

    #[error("window/grid mismatch: {0}")]
    Mismatch(String),

    #[error("invalid location ({0}, {1}): {2}")]
    InvalidLocation(i64, i64, String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("singular normal equations (pivot {pivot:e} at column {column})")]
    Singular { column: usize, pivot: f64 },

    #[error("spectral pole: |1 - sum d e^(ik.l)|^2 = {0:e}")]
    Pole(f64),

    #[error("cepstral exponent magnitude {magnitude:.3} exceeds cap {cap}")]
    Overflow { magnitude: f64, cap: f64 },

    #[error("Hermitian symmetry violated: imaginary residue {0:e}")]
    Asymmetric(f64),
}

impl Error {
    /// True for singularity, pole, overflow and symmetry failures.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::Pole(_) | Error::Overflow { .. } | Error::Asymmetric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
