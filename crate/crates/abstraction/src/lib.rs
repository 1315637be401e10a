//! Causal abstraction over finite discrete SCMs: cluster low-level variables
//! into high-level ones, map values through a constructive abstraction
//! function, and verify that the two models answer queries consistently.
//!
//! The pieces fit together as a pipeline: pick an intervariable clustering
//! ([`InterClustering`]) and per-cluster value blocks ([`IntraClustering`]),
//! build the abstraction function ([`build_tau`]), check the invariance
//! condition that makes mechanisms well-defined on blocks ([`check_aic`]),
//! and then derive the abstract model ([`construct_abstraction`]). Queries
//! move between levels with [`lift_query`]/[`lower_query`], and
//! [`check_layer_tau_consistency`] verifies agreement layer by layer.

mod aic;
mod construct;
mod consistency;
mod error;
mod intra;
mod query_map;
mod tau;

pub use aic::{
    check_aic, check_aic_with_budget, check_data_aic, AicReport, AicWitness, DataAicMode,
    DATA_AIC_TOL,
};
pub use consistency::{
    check_l3_tau_consistency_functional, check_l3_tau_consistency_functional_with_budget,
    check_layer_tau_consistency, check_layer_tau_consistency_with_budget,
    check_q_tau_consistency, q_tau_values, DEFAULT_WORLD_BUDGET, EXACT_TOL, OPTIMIZED_TOL,
};
pub use construct::construct_abstraction;
pub use error::AbstractionError;
pub use graphs::{check_admissible, Cluster, InterClustering};
pub use intra::{orbit_intra_clustering, ClusterBlocks, IntraBlock, IntraClustering};
pub use query_map::{lift_query, lower_query, push_assignment, LoweredQuery};
pub use tau::{apply_tau, build_tau, ConstructiveTau};
