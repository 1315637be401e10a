use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::diagram::CausalDiagram;
use crate::domain::{Domain, MixedRadix, Value};
use crate::error::ScmError;
use crate::expr::{parse_expr, EvalError};

pub type VariableId = String;

/// Total mass tolerance for exogenous block distributions.
pub const EXO_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: VariableId,
    pub domain: Domain,
}

/// One independent exogenous noise source.
///
/// Mechanisms that list the same block are dependent; distinct blocks are
/// always independent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExogenousBlock {
    pub name: String,
    pub domain: Domain,
    pub pmf: Vec<f64>,
}

/// Mechanism as written in a model file: either an explicit table keyed by
/// comma-joined parent values (endogenous parents first, then exogenous, in
/// declaration order; `""` for no parents) or an expression over parent
/// names. Expressions are compiled to tables at load time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MechanismSpec {
    pub output: VariableId,
    #[serde(default)]
    pub endo_parents: Vec<VariableId>,
    #[serde(default)]
    pub exo_parents: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<BTreeMap<String, Value>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expr: Option<String>,
}

impl MechanismSpec {
    pub fn from_table(
        output: &str,
        endo_parents: &[&str],
        exo_parents: &[&str],
        table: BTreeMap<String, Value>,
    ) -> Self {
        MechanismSpec {
            output: output.to_string(),
            endo_parents: endo_parents.iter().map(|s| s.to_string()).collect(),
            exo_parents: exo_parents.iter().map(|s| s.to_string()).collect(),
            table: Some(table),
            expr: None,
        }
    }

    pub fn from_expr(output: &str, endo_parents: &[&str], exo_parents: &[&str], expr: &str) -> Self {
        MechanismSpec {
            output: output.to_string(),
            endo_parents: endo_parents.iter().map(|s| s.to_string()).collect(),
            exo_parents: exo_parents.iter().map(|s| s.to_string()).collect(),
            table: None,
            expr: Some(expr.to_string()),
        }
    }
}

/// Compiled mechanism view: always in table form.
#[derive(Clone, Debug, PartialEq)]
pub struct Mechanism {
    pub output: VariableId,
    pub endo_parents: Vec<VariableId>,
    pub exo_parents: Vec<String>,
    pub table: BTreeMap<String, Value>,
}

#[derive(Clone, Debug)]
pub(crate) struct CompiledMech {
    pub(crate) endo_parents: Vec<usize>,
    pub(crate) exo_parents: Vec<usize>,
    // Output value indices, row-major over (endo parents, exo parents) with
    // the last parent varying fastest.
    pub(crate) table: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct ScmFile {
    variables: Vec<Variable>,
    exogenous: Vec<ExogenousBlock>,
    mechanisms: Vec<MechanismSpec>,
}

/// Finite discrete structural causal model: endogenous variables, independent
/// exogenous blocks, and one mechanism per endogenous variable. Construction
/// validates the whole model; the mechanism structure must be acyclic.
#[derive(Clone, Debug)]
pub struct Scm {
    pub(crate) vars: Vec<Variable>,
    pub(crate) exo: Vec<ExogenousBlock>,
    pub(crate) mechs: Vec<CompiledMech>,
    pub(crate) var_index: BTreeMap<String, usize>,
    pub(crate) exo_index: BTreeMap<String, usize>,
    pub(crate) topo: Vec<usize>,
}

pub(crate) fn join_key(values: &[Value]) -> String {
    values
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(",")
}

impl Scm {
    pub fn new(
        variables: Vec<Variable>,
        exogenous: Vec<ExogenousBlock>,
        mechanisms: Vec<MechanismSpec>,
    ) -> Result<Self, ScmError> {
        let mut names = BTreeSet::new();
        for v in &variables {
            if !names.insert(v.name.clone()) {
                return Err(ScmError::DuplicateName(v.name.clone()));
            }
        }
        for b in &exogenous {
            if !names.insert(b.name.clone()) {
                return Err(ScmError::DuplicateName(b.name.clone()));
            }
        }
        for (name, domain) in variables
            .iter()
            .map(|v| (&v.name, &v.domain))
            .chain(exogenous.iter().map(|b| (&b.name, &b.domain)))
        {
            if domain.is_empty() {
                return Err(ScmError::EmptyDomain(name.clone()));
            }
            let mut seen = BTreeSet::new();
            for &value in domain.values() {
                if !seen.insert(value) {
                    return Err(ScmError::DuplicateDomainValue(name.clone(), value));
                }
            }
        }
        for b in &exogenous {
            if b.pmf.len() != b.domain.len() {
                return Err(ScmError::PmfArity {
                    name: b.name.clone(),
                    expected: b.domain.len(),
                    got: b.pmf.len(),
                });
            }
            for (index, &p) in b.pmf.iter().enumerate() {
                if p < 0.0 || !p.is_finite() {
                    return Err(ScmError::NegativeProbability {
                        name: b.name.clone(),
                        index,
                    });
                }
            }
            let sum: f64 = b.pmf.iter().sum();
            if (sum - 1.0).abs() > EXO_TOLERANCE {
                return Err(ScmError::PmfNotNormalized {
                    name: b.name.clone(),
                    sum,
                    tolerance: EXO_TOLERANCE,
                });
            }
        }

        let var_index: BTreeMap<String, usize> = variables
            .iter()
            .enumerate()
            .map(|(i, v)| (v.name.clone(), i))
            .collect();
        let exo_index: BTreeMap<String, usize> = exogenous
            .iter()
            .enumerate()
            .map(|(i, b)| (b.name.clone(), i))
            .collect();

        let mut compiled: Vec<Option<CompiledMech>> = vec![None; variables.len()];
        for spec in &mechanisms {
            let &out = var_index
                .get(&spec.output)
                .ok_or_else(|| ScmError::UnknownVariable(spec.output.clone()))?;
            if compiled[out].is_some() {
                return Err(ScmError::DuplicateMechanism(spec.output.clone()));
            }
            compiled[out] = Some(compile_mechanism(
                spec,
                &variables,
                &exogenous,
                &var_index,
                &exo_index,
            )?);
        }
        let mechs: Vec<CompiledMech> = compiled
            .into_iter()
            .zip(&variables)
            .map(|(m, v)| m.ok_or_else(|| ScmError::MissingMechanism(v.name.clone())))
            .collect::<Result<_, _>>()?;

        // Acyclicity of the endogenous parent structure, and an evaluation order.
        let mut graph: DiGraph<usize, ()> = DiGraph::new();
        let nodes: Vec<_> = (0..variables.len()).map(|i| graph.add_node(i)).collect();
        for (child, mech) in mechs.iter().enumerate() {
            for &parent in &mech.endo_parents {
                graph.add_edge(nodes[parent], nodes[child], ());
            }
        }
        let topo = toposort(&graph, None)
            .map_err(|cycle| {
                ScmError::CyclicMechanisms(variables[cycle.node_id().index()].name.clone())
            })?
            .into_iter()
            .map(|n| n.index())
            .collect();

        Ok(Scm {
            vars: variables,
            exo: exogenous,
            mechs,
            var_index,
            exo_index,
            topo,
        })
    }

    pub fn variables(&self) -> &[Variable] {
        &self.vars
    }

    pub fn exogenous(&self) -> &[ExogenousBlock] {
        &self.exo
    }

    pub fn variable(&self, name: &str) -> Result<&Variable, ScmError> {
        self.var_index
            .get(name)
            .map(|&i| &self.vars[i])
            .ok_or_else(|| ScmError::UnknownVariable(name.to_string()))
    }

    pub fn exogenous_block(&self, name: &str) -> Result<&ExogenousBlock, ScmError> {
        self.exo_index
            .get(name)
            .map(|&i| &self.exo[i])
            .ok_or_else(|| ScmError::UnknownExogenous(name.to_string()))
    }

    pub fn has_variable(&self, name: &str) -> bool {
        self.var_index.contains_key(name)
    }

    pub(crate) fn var_id(&self, name: &str) -> Result<usize, ScmError> {
        self.var_index
            .get(name)
            .copied()
            .ok_or_else(|| ScmError::UnknownVariable(name.to_string()))
    }

    pub(crate) fn value_index(&self, var: usize, value: Value) -> Result<usize, ScmError> {
        self.vars[var].domain.index_of(value).ok_or_else(|| {
            ScmError::ValueOutsideDomain {
                variable: self.vars[var].name.clone(),
                value,
            }
        })
    }

    /// Mechanism of `name` in compiled table form.
    pub fn mechanism(&self, name: &str) -> Result<Mechanism, ScmError> {
        let out = self.var_id(name)?;
        let mech = &self.mechs[out];
        let endo_parents: Vec<String> = mech
            .endo_parents
            .iter()
            .map(|&i| self.vars[i].name.clone())
            .collect();
        let exo_parents: Vec<String> = mech
            .exo_parents
            .iter()
            .map(|&i| self.exo[i].name.clone())
            .collect();
        let sizes: Vec<usize> = mech
            .endo_parents
            .iter()
            .map(|&i| self.vars[i].domain.len())
            .chain(mech.exo_parents.iter().map(|&i| self.exo[i].domain.len()))
            .collect();
        let mut table = BTreeMap::new();
        for (row, idx) in MixedRadix::new(sizes).enumerate() {
            let values: Vec<Value> = idx
                .iter()
                .enumerate()
                .map(|(slot, &value_idx)| {
                    if slot < mech.endo_parents.len() {
                        self.vars[mech.endo_parents[slot]].domain.values()[value_idx]
                    } else {
                        let b = mech.exo_parents[slot - mech.endo_parents.len()];
                        self.exo[b].domain.values()[value_idx]
                    }
                })
                .collect();
            table.insert(
                join_key(&values),
                self.vars[out].domain.values()[mech.table[row]],
            );
        }
        Ok(Mechanism {
            output: name.to_string(),
            endo_parents,
            exo_parents,
            table,
        })
    }

    /// Number of joint exogenous assignments.
    pub fn exo_assignment_count(&self) -> u128 {
        MixedRadix::count(&self.exo.iter().map(|b| b.domain.len()).collect::<Vec<_>>())
    }

    /// Visit every joint exogenous assignment with its probability.
    /// Zero-probability assignments are skipped.
    pub fn for_each_exogenous(&self, mut f: impl FnMut(&BTreeMap<String, Value>, f64)) {
        let sizes: Vec<usize> = self.exo.iter().map(|b| b.domain.len()).collect();
        for idx in MixedRadix::new(sizes) {
            let p: f64 = idx.iter().zip(&self.exo).map(|(&i, b)| b.pmf[i]).product();
            if p == 0.0 {
                continue;
            }
            let u: BTreeMap<String, Value> = idx
                .iter()
                .zip(&self.exo)
                .map(|(&i, b)| (b.name.clone(), b.domain.values()[i]))
                .collect();
            f(&u, p);
        }
    }

    /// Causal diagram: directed edges from endogenous parents, bidirected
    /// edges between variables whose mechanisms share an exogenous block.
    pub fn induced_diagram(&self) -> CausalDiagram {
        let nodes: Vec<String> = self.vars.iter().map(|v| v.name.clone()).collect();
        let mut directed = BTreeSet::new();
        for (child, mech) in self.mechs.iter().enumerate() {
            for &parent in &mech.endo_parents {
                directed.insert((self.vars[parent].name.clone(), self.vars[child].name.clone()));
            }
        }
        let mut bidirected = BTreeSet::new();
        for block in 0..self.exo.len() {
            let consumers: Vec<usize> = (0..self.vars.len())
                .filter(|&v| self.mechs[v].exo_parents.contains(&block))
                .collect();
            for (i, &a) in consumers.iter().enumerate() {
                for &b in &consumers[i + 1..] {
                    let (x, y) = (self.vars[a].name.clone(), self.vars[b].name.clone());
                    bidirected.insert(if x < y { (x, y) } else { (y, x) });
                }
            }
        }
        CausalDiagram::new(nodes, directed, bidirected)
            .expect("a validated model always induces a valid diagram")
    }

    pub fn to_json(&self) -> String {
        let file = ScmFile {
            variables: self.vars.clone(),
            exogenous: self.exo.clone(),
            mechanisms: self
                .vars
                .iter()
                .map(|v| {
                    let m = self
                        .mechanism(&v.name)
                        .expect("every variable has a mechanism");
                    MechanismSpec {
                        output: m.output,
                        endo_parents: m.endo_parents,
                        exo_parents: m.exo_parents,
                        table: Some(m.table),
                        expr: None,
                    }
                })
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self, ScmError> {
        let file: ScmFile = serde_json::from_str(text).map_err(|e| ScmError::PmfInvalid {
            vars: vec![],
            message: format!("model JSON: {e}"),
        })?;
        Scm::new(file.variables, file.exogenous, file.mechanisms)
    }
}

fn compile_mechanism(
    spec: &MechanismSpec,
    variables: &[Variable],
    exogenous: &[ExogenousBlock],
    var_index: &BTreeMap<String, usize>,
    exo_index: &BTreeMap<String, usize>,
) -> Result<CompiledMech, ScmError> {
    let endo_parents: Vec<usize> = spec
        .endo_parents
        .iter()
        .map(|p| {
            var_index
                .get(p)
                .copied()
                .ok_or_else(|| ScmError::UnknownVariable(p.clone()))
        })
        .collect::<Result<_, _>>()?;
    let exo_parents: Vec<usize> = spec
        .exo_parents
        .iter()
        .map(|p| {
            exo_index
                .get(p)
                .copied()
                .ok_or_else(|| ScmError::UnknownExogenous(p.clone()))
        })
        .collect::<Result<_, _>>()?;
    let mut seen = BTreeSet::new();
    for p in spec.endo_parents.iter().chain(&spec.exo_parents) {
        if !seen.insert(p.clone()) {
            return Err(ScmError::DuplicateParent {
                output: spec.output.clone(),
                parent: p.clone(),
            });
        }
    }

    let out_domain = &variables[var_index[&spec.output]].domain;
    let parent_domains: Vec<&Domain> = endo_parents
        .iter()
        .map(|&i| &variables[i].domain)
        .chain(exo_parents.iter().map(|&i| &exogenous[i].domain))
        .collect();
    let parent_names: Vec<&str> = spec
        .endo_parents
        .iter()
        .chain(&spec.exo_parents)
        .map(|s| s.as_str())
        .collect();
    let sizes: Vec<usize> = parent_domains.iter().map(|d| d.len()).collect();

    let mut table = Vec::with_capacity(sizes.iter().product());
    match (&spec.table, &spec.expr) {
        (Some(rows), None) => {
            let mut expected_keys = BTreeSet::new();
            for idx in MixedRadix::new(sizes.clone()) {
                let values: Vec<Value> = idx
                    .iter()
                    .zip(&parent_domains)
                    .map(|(&i, d)| d.values()[i])
                    .collect();
                let key = join_key(&values);
                let &value = rows.get(&key).ok_or_else(|| ScmError::TableRowMissing {
                    output: spec.output.clone(),
                    key: key.clone(),
                })?;
                let value_idx =
                    out_domain
                        .index_of(value)
                        .ok_or_else(|| ScmError::ValueOutsideDomain {
                            variable: spec.output.clone(),
                            value,
                        })?;
                table.push(value_idx);
                expected_keys.insert(key);
            }
            if let Some(extra) = rows.keys().find(|k| !expected_keys.contains(*k)) {
                return Err(ScmError::TableRowUnknown {
                    output: spec.output.clone(),
                    key: extra.clone(),
                });
            }
        }
        (None, Some(src)) => {
            let expr = parse_expr(src).map_err(|e| ScmError::ExprParse {
                output: spec.output.clone(),
                position: e.position,
                message: e.message,
            })?;
            let mut idents = BTreeSet::new();
            expr.collect_idents(&mut idents);
            for ident in &idents {
                if !parent_names.contains(&ident.as_str()) {
                    return Err(ScmError::ExprUnknownIdent {
                        output: spec.output.clone(),
                        ident: ident.clone(),
                    });
                }
            }
            for idx in MixedRadix::new(sizes.clone()) {
                let values: Vec<Value> = idx
                    .iter()
                    .zip(&parent_domains)
                    .map(|(&i, d)| d.values()[i])
                    .collect();
                let env = |name: &str| {
                    parent_names
                        .iter()
                        .position(|&p| p == name)
                        .map(|slot| values[slot])
                };
                let value = expr.eval(&env).map_err(|e| match e {
                    EvalError::ModuloZero => ScmError::ExprModuloZero {
                        output: spec.output.clone(),
                        key: join_key(&values),
                    },
                    EvalError::UnknownIdent(ident) => ScmError::ExprUnknownIdent {
                        output: spec.output.clone(),
                        ident,
                    },
                })?;
                let value_idx =
                    out_domain
                        .index_of(value)
                        .ok_or_else(|| ScmError::ExprValueOutsideDomain {
                            output: spec.output.clone(),
                            key: join_key(&values),
                            value,
                        })?;
                table.push(value_idx);
            }
        }
        _ => return Err(ScmError::MechanismBodyAmbiguous(spec.output.clone())),
    }

    Ok(CompiledMech {
        endo_parents,
        exo_parents,
        table,
    })
}
