//! Finite discrete structural causal models with exact evaluation across all
//! three layers: observational and interventional distributions, and
//! cross-world counterfactual probabilities computed by exhaustive
//! enumeration of the exogenous space.

pub mod diagram;
pub mod domain;
pub mod error;
pub mod eval;
pub mod expr;
pub mod pmf;
pub mod query;
pub mod scm;

pub use diagram::CausalDiagram;
pub use domain::{joint_assignments, Domain, MixedRadix, Value};
pub use error::ScmError;
pub use eval::DEFAULT_ENUM_BUDGET;
pub use pmf::{Pmf, PMF_TOLERANCE};
pub use query::{parse_query, CtfEvent, CtfQuery};
pub use scm::{
    ExogenousBlock, Mechanism, MechanismSpec, Scm, Variable, VariableId, EXO_TOLERANCE,
};
