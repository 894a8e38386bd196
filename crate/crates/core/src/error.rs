use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum QsatError {
    #[error(
        "infeasible ensemble: {m} clauses requested but only {available} distinct {k}-subsets of {n} qubits exist"
    )]
    InfeasibleEnsemble { n: usize, m: usize, k: usize, available: String },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numerical domain error in {term}: argument {value} is not positive")]
    NumericalDomain { term: String, value: f64 },

    #[error("unsupported instance: {0}")]
    Unsupported(String),

    #[error("degenerate projector on clause {clause}: the orthogonality condition does not fix the dimer qubit")]
    DegenerateProjector { clause: usize },

    #[error("ill-conditioned fit (condition estimate {condition:.3e}): {reason}")]
    IllConditioned { condition: f64, reason: String },

    #[error("parameter inconsistency: {0}")]
    Inconsistent(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = QsatError> = std::result::Result<T, E>;
