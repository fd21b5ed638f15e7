use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {left:?} vs {right:?}")]
    DimensionMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("expected {expected} entries, got {got}")]
    InvalidData { expected: usize, got: usize },

    #[error("matrix is singular")]
    Singular,

    #[error("{what} did not converge after {iterations} iterations")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
    },

    #[error("invalid digraph: {0}")]
    InvalidDigraph(String),

    #[error("forest enumeration is limited to n <= {limit} vertices, got n = {n}")]
    EnumerationLimit { n: usize, limit: usize },

    #[error("invalid dependency matrix: {0}")]
    InvalidDependencyMatrix(String),

    #[error("tau = {tau} is outside (0, {tau_max}], P = I - tau*L would not be stochastic")]
    TauOutOfRange { tau: f64, tau_max: f64 },

    #[error("Laplacian has index {0}, the eigenprojection formula needs index 1")]
    IndexNotOne(usize),

    #[error("invalid final-class representatives: {0}")]
    InvalidSelection(String),

    #[error("J*S*x0 has unequal components (spread {spread:e})")]
    InconsistentQuasiConsensus { spread: f64 },

    #[error("integration would need {steps} steps, limit is {limit}")]
    StepLimit { steps: u64, limit: u64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}
