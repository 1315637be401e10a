use graphs::GraphError;
use scm_core::ScmError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum NcmError {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("enumeration needs {needed} elementary evaluations, budget is {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },

    #[error("training diverged at iteration {iteration} (loss = {loss})")]
    Divergence { iteration: usize, loss: f64 },

    #[error(
        "acceptance rate too low: {accepted} accepted out of {attempts} attempts (floor {floor})"
    )]
    AcceptanceTooLow {
        accepted: usize,
        attempts: usize,
        floor: f64,
    },

    #[error("conditioning event has zero probability: {0}")]
    ZeroProbabilityConditioning(String),

    #[error(transparent)]
    Scm(#[from] ScmError),

    #[error(transparent)]
    Graph(#[from] GraphError),

    #[error("checkpoint io: {0}")]
    Io(#[from] std::io::Error),

    #[error("checkpoint format: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, NcmError>;
