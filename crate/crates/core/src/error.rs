use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },

    #[error("line {line}: unknown device kind `{kind}`")]
    UnknownKind { line: usize, kind: String },

    #[error("line {line}: branch `{id}` is a self-loop at node `{node}`")]
    SelfLoop {
        line: usize,
        id: String,
        node: String,
    },

    #[error("line {line}: duplicate branch id `{id}`")]
    DuplicateId { line: usize, id: String },

    #[error("line {line}: branch `{id}` has no characteristic")]
    MissingCharacteristic { line: usize, id: String },

    #[error("circuit graph is disconnected ({components} components)")]
    Disconnected { components: usize },

    #[error("circuit has no branches")]
    EmptyCircuit,

    #[error("invalid spanning tree: {0}")]
    InvalidTree(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("circuit has {0} memristors; at most one is supported")]
    TooManyMemristors(usize),

    #[error("circuit has no memristor")]
    NoMemristor,

    #[error("singular {what} at the evaluation point")]
    SingularDevice { what: &'static str },

    #[error("singular Jacobian (condition estimate {condition:e})")]
    SingularJacobian { condition: f64 },

    #[error(
        "Newton iteration did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("corank {found} where corank 1 is required")]
    CorankMismatch { found: usize },

    #[error("no index-two structure: least-squares residual {residual:e} exceeds {threshold:e}")]
    NoIndexTwo { residual: f64, threshold: f64 },

    #[error(
        "g_z is singular (smallest singular value {sigma_min:e}); index exceeds one at this point"
    )]
    IndexAboveOne { sigma_min: f64 },

    #[error("eigenvalue computation did not converge")]
    EigenFailure,

    #[error("{0}")]
    Evaluation(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
