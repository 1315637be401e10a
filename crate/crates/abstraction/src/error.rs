use scm_core::ScmError;
use thiserror::Error;

use crate::aic::AicReport;

#[derive(Debug, Error)]
pub enum AbstractionError {
    #[error(transparent)]
    Scm(#[from] ScmError),

    #[error(transparent)]
    Graph(#[from] graphs::GraphError),

    #[error("unknown variable: {0}")]
    UnknownVariable(String),

    #[error("unknown cluster: {0}")]
    UnknownCluster(String),

    #[error("invalid clustering: {0}")]
    ClusterInvalid(String),

    /// A query term's variables do not form a union of clusters.
    #[error("query is not cluster-aligned: {0}")]
    MisalignedQuery(String),
    #[error("layer must be 1, 2, or 3, got {0}")]
    InvalidLayer(u8),

    #[error("clustering is not admissible: {0}")]
    NotAdmissible(String),

    /// Construction was asked for a model whose mechanisms distinguish
    /// low-level values that the abstraction function identifies.
    #[error("abstract invariance condition violated")]
    AicViolation(AicReport),

    #[error("missing required distribution: {0}")]
    MissingDistribution(String),

    #[error("generator is not a bijection: {0}")]
    NonBijectiveGenerator(String),
}
