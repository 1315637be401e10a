use thiserror::Error;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error(transparent)]
    Scm(#[from] scm_core::ScmError),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("invalid clustering: {0}")]
    ClusterInvalid(String),
    #[error("query not supported by this identification oracle: {0}")]
    UnsupportedQuery(String),
    #[error("no valid clustering: {0}")]
    ChooseFailed(String),
    #[error("estimand parse error at byte {position}: {message}")]
    EstimandParse { position: usize, message: String },
    #[error("no domain known for variable `{0}`")]
    MissingDomain(String),
}
