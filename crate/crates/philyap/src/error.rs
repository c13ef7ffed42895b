//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch in {context}: expected {expected:?}, found {found:?}")]
    ShapeMismatch {
        context: &'static str,
        expected: (usize, usize),
        found: (usize, usize),
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("norm overflow: power application produced non-finite values; pre-scale the matrix")]
    NormOverflow,

    #[error("overflow during squaring: scaling parameter too small or pathological coefficient matrix")]
    SquaringOverflow,

    #[error("zero reference: relative error undefined for a reference with zero 1-norm")]
    ZeroReference,

    #[error("no lower indices: the downward recursion needs l >= 1")]
    NoLowerIndices,

    #[error("degree set exhausted: l = {0} leaves no admissible Taylor degree")]
    DegreeSetExhausted(usize),

    #[error("unsupported Paterson-Stockmeyer degree {0}; supported degrees are 6, 9, 12, 16, 20, 25")]
    UnsupportedDegree(usize),

    #[error("oracle scale exceeded: N = {n} but the dense Kronecker oracle is limited to N <= {max}")]
    OracleScale { n: usize, max: usize },

    #[error("stiff beyond oracle: adaptive step size underflowed at t = {0}")]
    StiffOracle(f64),

    #[error("non-convergent bisection while deriving a theta threshold")]
    Bisection,

    #[error("blow-up at step {step}: integration state became non-finite")]
    BlowUp { step: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
