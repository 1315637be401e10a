//! Graph-constrained parametric SCMs over finite domains.
//!
//! A model places one exogenous categorical on each maximal bidirected
//! clique of its diagram and a softmax response table on each node, indexed
//! by (parent values, containing-clique states); a per-node realization
//! uniform turns the table row into a value by inverse CDF under the domain
//! ordering, and is shared across counterfactual worlds. Everything the
//! model induces — interventional joints and multi-world counterfactual
//! probabilities — is computed exactly, with analytic partials for every
//! logit, so fitting is plain gradient descent rather than simulation.
//!
//! Evaluation and fitting are serial and deterministic; a frozen model is
//! safe to share across threads for evaluation and sampling. Checkpoints
//! are JSON (`Ncm::save_checkpoint` / `Ncm::load_checkpoint`) and validate
//! structure on load.

mod cliques;
mod error;
mod eval;
mod fit;
mod model;
mod rep;
mod sample;

pub use cliques::maximal_cliques;
pub use error::{NcmError, Result};
pub use eval::InducedEntries;
pub use fit::{data_loss, fit, FitReport, QueryReg};
pub use model::{
    build_ncm, encode_scm, Clique, FitMode, Gradients, Ncm, NodeResponse, TrainConfig,
    DEFAULT_MAX_CLIQUE_STATES,
};
pub use rep::{
    fit_representation, linear_probe_accuracy, ClusterData, ClusterRep, RepConfig, RepMap,
};
pub use sample::SampleOpts;
