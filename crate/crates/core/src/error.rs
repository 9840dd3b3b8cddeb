use thiserror::Error;

/// Errors raised by model construction and the exact solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("a state space needs at least 2 states, got {0}")]
    TooFewStates(usize),

    #[error("fitness value at state {state} is not finite ({value})")]
    NonFiniteFitness { state: usize, value: f64 },

    #[error("{states} states exceeds the dense-matrix cap of {cap}")]
    TooLarge { states: usize, cap: usize },

    #[error("kernel is {rows}x{cols} but the state space has {states} states")]
    KernelShape {
        rows: usize,
        cols: usize,
        states: usize,
    },

    #[error("malformed kernel row {row}: {detail}")]
    MalformedKernel { row: usize, detail: String },

    #[error("optimal state {state} is not absorbing (P(i,i) = {self_loop}); lump the optimal rows first")]
    NotAbsorbing { state: usize, self_loop: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("I - Q is singular at state {state}: the chain is not convergent, run a convergence check first")]
    Singular { state: usize },

    #[error("matrix is numerically singular: {0}")]
    SingularMatrix(String),

    #[error(
        "power iteration did not converge after {sweeps} sweeps; rho lies in [{lower}, {upper}]"
    )]
    NoConvergence {
        sweeps: usize,
        lower: f64,
        upper: f64,
    },

    #[error("the initial distribution puts no mass on non-optimal states")]
    ZeroMass,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid problem definition: {0}")]
    Problem(String),

    #[error("operation cancelled")]
    Cancelled,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
