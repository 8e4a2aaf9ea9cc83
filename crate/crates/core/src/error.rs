use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("invalid instance: {0}")]
    Instance(String),

    #[error("prefix not in the support of the process: {0}")]
    Support(String),

    #[error("missing value for prefix {0}")]
    MissingValue(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("policy called out of order: expected period {expected}, got {got}")]
    Sequencing { expected: usize, got: usize },

    #[error("size cap exceeded: {what} ({size} > {cap})")]
    Cap { what: &'static str, size: usize, cap: usize },

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("feasibility audit failed in episode {episode}: {detail}")]
    Audit { episode: usize, detail: String },

    #[error("internal invariant violated: {0}")]
    Internal(String),

    #[error("lp solver error: {0}")]
    Lp(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
