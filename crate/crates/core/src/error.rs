use alloc::string::String;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid system shape: {0}")]
    InvalidShape(String),

    #[error("invalid truth table: {0}")]
    InvalidTruthTable(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("{spins} spins exceed the enumeration limit of {limit}")]
    EnumerationLimit { spins: usize, limit: usize },

    #[error("search space of {size} entries exceeds the limit of {limit}")]
    SearchLimit { size: usize, limit: usize },

    #[error("all {starts} solver starts failed: {reason}")]
    SolverFailed { starts: usize, reason: String },

    #[error(
        "sampling gave up after {attempts} attempts: {feasible}/{wanted_feasible} feasible, \
         {infeasible}/{wanted_infeasible} infeasible"
    )]
    SamplingExhausted {
        attempts: usize,
        feasible: usize,
        wanted_feasible: usize,
        infeasible: usize,
        wanted_infeasible: usize,
    },

    #[error("training diverged at epoch {epoch}")]
    Diverged { epoch: usize },
}
