use thiserror::Error;

/// Errors raised while constructing or evaluating a structural causal model.
#[derive(Debug, Error)]
pub enum ScmError {
    #[error("duplicate name `{0}`")]
    DuplicateName(String),
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),
    #[error("unknown exogenous block `{0}`")]
    UnknownExogenous(String),
    #[error("no value supplied for exogenous block `{0}`")]
    MissingExogenousValue(String),
    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),
    #[error("domain of `{0}` lists value {1} more than once")]
    DuplicateDomainValue(String, i64),
    #[error("value {value} is not in the domain of `{variable}`")]
    ValueOutsideDomain { variable: String, value: i64 },
    #[error("pmf of `{name}` has {got} entries but the domain has {expected}")]
    PmfArity {
        name: String,
        expected: usize,
        got: usize,
    },
    #[error("pmf of `{name}` has a negative entry at index {index}")]
    NegativeProbability { name: String, index: usize },
    #[error("pmf of `{name}` sums to {sum:e}, expected 1 within {tolerance:e}")]
    PmfNotNormalized {
        name: String,
        sum: f64,
        tolerance: f64,
    },
    #[error("no mechanism defined for variable `{0}`")]
    MissingMechanism(String),
    #[error("variable `{0}` has more than one mechanism")]
    DuplicateMechanism(String),
    #[error("mechanism for `{output}` lists parent `{parent}` more than once")]
    DuplicateParent { output: String, parent: String },
    #[error("mechanism for `{0}` must define exactly one of `table` or `expr`")]
    MechanismBodyAmbiguous(String),
    #[error("mechanism for `{output}` is missing a table row for parent values `{key}`")]
    TableRowMissing { output: String, key: String },
    #[error("mechanism for `{output}` has table row `{key}` matching no parent assignment")]
    TableRowUnknown { output: String, key: String },
    #[error("mechanisms form a cycle (involving `{0}`)")]
    CyclicMechanisms(String),
    #[error("expression for `{output}`: {message} (byte {position})")]
    ExprParse {
        output: String,
        position: usize,
        message: String,
    },
    #[error("expression for `{output}` references `{ident}`, which is not a declared parent")]
    ExprUnknownIdent { output: String, ident: String },
    #[error("expression for `{output}` gives {value} on parent values `{key}`, outside the output domain")]
    ExprValueOutsideDomain {
        output: String,
        key: String,
        value: i64,
    },
    #[error("expression for `{output}`: modulo by zero on parent values `{key}`")]
    ExprModuloZero { output: String, key: String },
    #[error("query parse error at byte {position}: {message}")]
    QueryParse { position: usize, message: String },
    #[error("conditioning event `{0}` has probability zero")]
    ZeroProbabilityConditioning(String),
    #[error("enumeration needs {needed} unit evaluations, over the budget of {budget}")]
    BudgetExceeded { needed: u128, budget: u128 },
    #[error("pmf over {vars:?}: {message}")]
    PmfInvalid { vars: Vec<String>, message: String },
    #[error("graph edge references unknown node `{0}`")]
    UnknownNode(String),
    #[error("graph has a self-loop at `{0}`")]
    SelfLoop(String),
    #[error("directed edges form a cycle (involving `{0}`)")]
    CyclicDiagram(String),
}
