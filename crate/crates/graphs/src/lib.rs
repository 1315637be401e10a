//! Graph-level machinery for causal models: latent projection, variable
//! clusterings, cluster diagrams, non-parametric identification with
//! symbolic estimands, and automatic cluster selection for query families.

mod cdag;
mod choose;
mod clustering;
mod error;
mod estimand;
mod file;
mod identify;
mod noncausal;
mod project;

pub use cdag::{check_admissible, induce_cdag, Cdag};
pub use choose::{
    choose_clusters, is_valid_choice, max_answerable_clustering, min_clustering,
    query_variable_sets, IdOracle, InterventionalIdOracle,
};
pub use clustering::{Cluster, InterClustering};
pub use error::GraphError;
pub use estimand::{free_names, parse_estimand, Estimand};
pub use file::GraphFile;
pub use identify::{
    as_interventional, identify_interventional, identify_sets, IdVerdict, InterventionalQuery,
};
pub use noncausal::NonCausalGraph;
pub use project::latent_projection;
