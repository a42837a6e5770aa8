use thiserror::Error;

/// Errors surfaced by graph construction, solvers, generators and optimizers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty edge list")]
    EmptyEdgeList,

    #[error("zero rating at row {row}: `{line}`")]
    ZeroRating { row: usize, line: String },

    #[error("malformed edge row {row}: `{line}`")]
    MalformedRow { row: usize, line: String },

    #[error("dynamically undefined node(s) {nodes:?}: zero incident strength and zero allocations")]
    DynamicallyUndefined { nodes: Vec<usize> },

    #[error("linear solver stalled: residual {residual:.3e} after {iterations} iterations (system may be singular)")]
    SolverStalled { residual: f64, iterations: usize },

    #[error("unstable step: state left [0,1] at t = {t}")]
    UnstableStep { t: f64 },

    #[error("infeasible component spec: {0}")]
    InfeasibleSpec(String),

    #[error("rewiring budget exhausted: {remaining} conflicting edges left after {attempts} swaps")]
    RewiringExhausted { remaining: usize, attempts: usize },

    #[error("empty target class: {0}")]
    EmptyTargetClass(String),

    #[error("mean-field singular: {0}")]
    MeanFieldSingular(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
