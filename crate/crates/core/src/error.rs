use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: String,
        found: String,
    },

    #[error("index ({row}, {col}) out of range for dimension {dim}")]
    IndexOutOfRange { row: usize, col: usize, dim: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (defect {defect:.3e})")]
    NotHermitian { defect: f64 },

    #[error("Jacobi eigensolver did not converge within {sweeps} sweeps (off-diagonal mass {off:.3e})")]
    NoConvergence { sweeps: usize, off: f64 },

    #[error("non-finite entry at position {0}")]
    NonFinite(usize),

    #[error("invalid trace weights: {0}")]
    InvalidWeights(String),

    #[error("malformed algebra description: {0}")]
    MalformedSpec(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("matrix is not unitary (defect {defect:.3e})")]
    NotUnitary { defect: f64 },

    #[error("operator lies outside the algebra (defect {defect:.3e})")]
    NotInAlgebra { defect: f64 },

    #[error("D does not return to the ancilla: d_({i},{j})^* d_({k},{l}) off by {defect:.3e}")]
    ReturnsViolation {
        i: usize,
        j: usize,
        k: usize,
        l: usize,
        defect: f64,
    },

    #[error("trace preservation fails at basis vector {index}: value {value}")]
    TracePreservation { index: usize, value: f64 },

    #[error("D is not in the modular algebra tensor M_k: slice ({row}, {col}) off by {defect:.3e}")]
    NotModular { row: usize, col: usize, defect: f64 },

    #[error("size {size} exceeds cap {cap}")]
    SizeCap { size: usize, cap: usize },

    #[error("singular matrix in linear solve")]
    Singular,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn mismatch(context: &'static str, expected: impl ToString, found: impl ToString) -> Error {
    Error::DimensionMismatch {
        context,
        expected: expected.to_string(),
        found: found.to_string(),
    }
}
