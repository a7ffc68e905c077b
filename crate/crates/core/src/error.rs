use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} index {index} out of range (limit {limit})")]
    OutOfRange {
        what: &'static str,
        index: usize,
        limit: usize,
    },

    #[error("pair ({0}, {0}) has no antisymmetric counterpart")]
    DiagonalPair(usize),

    #[error("invalid electron count: {0}")]
    ElectronCount(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("determinant basis too large: {count} determinants (limit {limit})")]
    BasisTooLarge { count: usize, limit: usize },

    #[error("inconsistent linear constraints: row {row} is a combination of rows {basis:?} with a different right-hand side")]
    InconsistentConstraints { row: usize, basis: Vec<usize> },

    #[error("state is not normalized (norm {0})")]
    NotNormalized(f64),

    #[error("solver did not converge ({status}) after {outer_iterations} outer iterations: primal residual {primal:.3e}, stationarity {stationarity:.3e}; {context}")]
    SolverFailed {
        status: String,
        outer_iterations: usize,
        primal: f64,
        stationarity: f64,
        context: String,
    },
}
