use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("site index {index} out of range for lattice with {n_sites} sites")]
    SiteOutOfRange { index: usize, n_sites: usize },
    #[error("lattice extent {0} is even, no unique center site")]
    EvenExtent(usize),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("Cholesky factorization failed at index {index} (pivot {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("quadratic form has imaginary residue {0:e}")]
    ImaginaryResidue(f64),
    #[error("integrator failure at step {step}: s = {s:e}; reduce dlambda")]
    IntegratorFailure { step: u64, s: f64 },
    #[error("no samples accumulated")]
    NoSamples,
    #[error("entry ({row}, {col}) was not accumulated")]
    EntryNotAccumulated { row: usize, col: usize },
    #[error("sampler mode mismatch: {0}")]
    ModeMismatch(&'static str),
    #[error("degree {degree} exceeds truncation degree {j_max}")]
    TruncationOverflow { degree: usize, j_max: usize },
    #[error("Fock vectors belong to different truncations or generator sets")]
    GeneratorMismatch,
    #[error("smearing vector lies outside the generator span (residual {0:e})")]
    OutsideSpan(f64),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be positive and finite",
        })
    }
}
