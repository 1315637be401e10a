//! Complete identification of interventional queries from the observational
//! distribution of a causal diagram with latent confounding.
//!
//! `identify_sets` decides whether P(y | do(x)) is a function of the
//! observational distribution alone and, when it is, returns an estimand
//! whose free names are exactly the query variables.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use scm_core::{CausalDiagram, CtfQuery, Value};

use crate::error::GraphError;
use crate::estimand::{free_names, Estimand};

#[derive(Clone, Debug, PartialEq)]
pub struct IdVerdict {
    pub identifiable: bool,
    pub estimand: Option<Estimand>,
}

/// Single-world interventional reading of a counterfactual query.
#[derive(Clone, Debug)]
pub struct InterventionalQuery {
    pub outcomes: BTreeSet<String>,
    pub interventions: BTreeSet<String>,
    /// Maps each free name of the estimand to its queried value.
    pub env: BTreeMap<String, (String, Value)>,
}

/// Reject anything that is not a plain P(y | do(x)): conditioning bars,
/// events from different worlds, or an outcome that is itself intervened.
pub fn as_interventional(query: &CtfQuery) -> Result<InterventionalQuery, GraphError> {
    if !query.given.is_empty() {
        return Err(GraphError::UnsupportedQuery(
            "conditional queries are not supported".into(),
        ));
    }
    if query.events.is_empty() {
        return Err(GraphError::UnsupportedQuery("query has no events".into()));
    }
    let worlds: BTreeSet<&Vec<(String, Value)>> =
        query.events.iter().map(|e| &e.intervention).collect();
    if worlds.len() != 1 {
        return Err(GraphError::UnsupportedQuery(
            "events span more than one world".into(),
        ));
    }
    let mut env = BTreeMap::new();
    let mut interventions = BTreeSet::new();
    for (var, value) in &query.events[0].intervention {
        interventions.insert(var.clone());
        env.insert(var.clone(), (var.clone(), *value));
    }
    let mut outcomes = BTreeSet::new();
    for e in &query.events {
        if interventions.contains(&e.var) {
            return Err(GraphError::UnsupportedQuery(format!(
                "outcome variable `{}` is also intervened",
                e.var
            )));
        }
        if !outcomes.insert(e.var.clone()) {
            return Err(GraphError::UnsupportedQuery(format!(
                "outcome variable `{}` appears twice",
                e.var
            )));
        }
        env.insert(e.var.clone(), (e.var.clone(), e.value));
    }
    Ok(InterventionalQuery {
        outcomes,
        interventions,
        env,
    })
}

pub fn identify_interventional(
    g: &CausalDiagram,
    query: &CtfQuery,
) -> Result<IdVerdict, GraphError> {
    let iq = as_interventional(query)?;
    identify_sets(g, &iq.outcomes, &iq.interventions)
}

pub fn identify_sets(
    g: &CausalDiagram,
    y: &BTreeSet<String>,
    x: &BTreeSet<String>,
) -> Result<IdVerdict, GraphError> {
    if y.is_empty() {
        return Err(GraphError::UnsupportedQuery(
            "query has no outcome variables".into(),
        ));
    }
    for n in y.iter().chain(x.iter()) {
        if !g.has_node(n) {
            return Err(GraphError::UnknownVariable(n.clone()));
        }
    }
    if y.intersection(x).next().is_some() {
        return Err(GraphError::UnsupportedQuery(
            "outcome variable is also intervened".into(),
        ));
    }
    let mut fresh = Freshener::new(g.nodes().iter().cloned());
    let q = SymbolicDist::joint(g.nodes());
    Ok(match id_rec(y, x, &q, g, &mut fresh) {
        Some(mut e) => {
            // Conditioning can leave reference variables in the expression
            // (the napkin shape does this with the mediator's parent). The
            // value is the same at every reference point, so averaging over
            // the observational marginal closes the estimand without
            // changing it.
            let yx: BTreeSet<String> = y.union(x).cloned().collect();
            let dummies: Vec<String> = free_names(&e)
                .into_iter()
                .filter(|n| !yx.contains(n))
                .collect();
            if !dummies.is_empty() {
                let mut aliases = Vec::new();
                let mut bound = Vec::new();
                for var in dummies {
                    let alias = fresh.fresh(&var);
                    e.rename_free(&var, &alias);
                    aliases.push(alias.clone());
                    bound.push((alias, var));
                }
                e = Estimand::Sum {
                    bound,
                    body: Box::new(Estimand::Product(vec![
                        Estimand::Prob {
                            outcomes: aliases,
                            given: Vec::new(),
                        },
                        e,
                    ])),
                };
            }
            IdVerdict {
                identifiable: true,
                estimand: Some(e),
            }
        }
        None => IdVerdict {
            identifiable: false,
            estimand: None,
        },
    })
}

/// Issues sum aliases that collide neither with variable names nor with each
/// other: the lowercased variable name, primed until unused.
struct Freshener {
    used: BTreeSet<String>,
}

impl Freshener {
    fn new(reserved: impl IntoIterator<Item = String>) -> Self {
        Freshener {
            used: reserved.into_iter().collect(),
        }
    }

    fn fresh(&mut self, var: &str) -> String {
        let mut name = var.to_lowercase();
        while self.used.contains(&name) {
            name.push('\'');
        }
        self.used.insert(name.clone());
        name
    }
}

fn sum_over(drop: &[String], mut body: Estimand, fresh: &mut Freshener) -> Estimand {
    if drop.is_empty() {
        return body;
    }
    let bound = drop
        .iter()
        .map(|var| {
            let alias = fresh.fresh(var);
            body.rename_free(var, &alias);
            (alias, var.clone())
        })
        .collect();
    Estimand::Sum {
        bound,
        body: Box::new(body),
    }
}

fn product(mut factors: Vec<Estimand>) -> Estimand {
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Estimand::Product(factors)
    }
}

/// A distribution over `vars`, written as an estimand whose free names are
/// the vars themselves plus any conditioning parameters inherited from an
/// enclosing recursion level.
#[derive(Clone)]
struct SymbolicDist {
    vars: BTreeSet<String>,
    expr: Estimand,
}

impl SymbolicDist {
    fn joint(nodes: &[String]) -> Self {
        SymbolicDist {
            vars: nodes.iter().cloned().collect(),
            expr: Estimand::Prob {
                outcomes: nodes.to_vec(),
                given: Vec::new(),
            },
        }
    }

    fn marginalize(&self, keep: &BTreeSet<String>, fresh: &mut Freshener) -> SymbolicDist {
        let drop: Vec<String> = self.vars.difference(keep).cloned().collect();
        let vars: BTreeSet<String> = self.vars.intersection(keep).cloned().collect();
        if drop.is_empty() {
            return self.clone();
        }
        // Dropping an unconditioned outcome of an atom just removes it.
        if let Estimand::Prob { outcomes, given } = &self.expr {
            if drop
                .iter()
                .all(|d| outcomes.contains(d) && !given.contains(d))
            {
                return SymbolicDist {
                    vars,
                    expr: Estimand::Prob {
                        outcomes: outcomes
                            .iter()
                            .filter(|o| !drop.contains(o))
                            .cloned()
                            .collect(),
                        given: given.clone(),
                    },
                };
            }
        }
        SymbolicDist {
            vars,
            expr: sum_over(&drop, self.expr.clone(), fresh),
        }
    }

    /// The conditional of one coordinate given a list of others, as an
    /// estimand fragment.
    fn conditional(&self, vi: &str, preds: &[String], fresh: &mut Freshener) -> Estimand {
        if let Estimand::Prob { outcomes, given } = &self.expr {
            if outcomes.iter().any(|o| o == vi)
                && preds.iter().all(|p| outcomes.contains(p))
            {
                let mut g2 = preds.to_vec();
                g2.extend(given.iter().cloned());
                return Estimand::Prob {
                    outcomes: vec![vi.to_string()],
                    given: g2,
                };
            }
        }
        let mut keep_num: BTreeSet<String> = preds.iter().cloned().collect();
        keep_num.insert(vi.to_string());
        let num = self.marginalize(&keep_num, fresh).expr;
        if preds.is_empty() {
            return num;
        }
        let keep_den: BTreeSet<String> = preds.iter().cloned().collect();
        let den = self.marginalize(&keep_den, fresh).expr;
        Estimand::Ratio {
            num: Box::new(num),
            den: Box::new(den),
        }
    }
}

/// One recursion step; `None` means a hedge was found and the query is not
/// identifiable.
fn id_rec(
    y: &BTreeSet<String>,
    x: &BTreeSet<String>,
    q: &SymbolicDist,
    g: &CausalDiagram,
    fresh: &mut Freshener,
) -> Option<Estimand> {
    let v: BTreeSet<String> = g.nodes().iter().cloned().collect();

    if x.is_empty() {
        return Some(q.marginalize(y, fresh).expr);
    }

    let an = ancestors(g, y);
    if an != v {
        let g2 = induced(g, &an);
        let q2 = q.marginalize(&an, fresh);
        let x2: BTreeSet<String> = x.intersection(&an).cloned().collect();
        return id_rec(y, &x2, &q2, &g2, fresh);
    }

    let an_bar = ancestors(&cut_incoming(g, x), y);
    let w: BTreeSet<String> = v
        .difference(x)
        .filter(|n| !an_bar.contains(*n))
        .cloned()
        .collect();
    if !w.is_empty() {
        let x2: BTreeSet<String> = x.union(&w).cloned().collect();
        return id_rec(y, &x2, q, g, fresh);
    }

    let rest: BTreeSet<String> = v.difference(x).cloned().collect();
    let comps = c_components(&induced(g, &rest));
    if comps.len() > 1 {
        let mut factors = Vec::new();
        for s in &comps {
            let xi: BTreeSet<String> = v.difference(s).cloned().collect();
            factors.push(id_rec(s, &xi, q, g, fresh)?);
        }
        let yx: BTreeSet<String> = y.union(x).cloned().collect();
        let drop: Vec<String> = v.difference(&yx).cloned().collect();
        return Some(sum_over(&drop, Estimand::Product(factors), fresh));
    }
    let s = comps
        .into_iter()
        .next()
        .expect("y is nonempty, so g minus x has a c-component");

    let full_comps = c_components(g);
    if full_comps.len() == 1 {
        return None;
    }

    let pi = topo_order(g);
    if full_comps.contains(&s) {
        let mut factors = Vec::new();
        for (i, vi) in pi.iter().enumerate() {
            if s.contains(vi) {
                factors.push(q.conditional(vi, &pi[..i], fresh));
            }
        }
        let drop: Vec<String> = s.difference(y).cloned().collect();
        return Some(sum_over(&drop, product(factors), fresh));
    }

    let sprime = full_comps
        .iter()
        .find(|c| s.is_subset(c))
        .expect("some c-component contains s");
    let mut factors = Vec::new();
    for (i, vi) in pi.iter().enumerate() {
        if sprime.contains(vi) {
            factors.push(q.conditional(vi, &pi[..i], fresh));
        }
    }
    let q2 = SymbolicDist {
        vars: sprime.clone(),
        expr: product(factors),
    };
    let g2 = induced(g, sprime);
    let x2: BTreeSet<String> = x.intersection(sprime).cloned().collect();
    id_rec(y, &x2, &q2, &g2, fresh)
}

/// Reflexive ancestors along directed edges.
fn ancestors(g: &CausalDiagram, seed: &BTreeSet<String>) -> BTreeSet<String> {
    let mut seen: BTreeSet<String> = seed.clone();
    let mut stack: Vec<String> = seed.iter().cloned().collect();
    while let Some(node) = stack.pop() {
        for p in g.parents(&node) {
            if seen.insert(p.to_string()) {
                stack.push(p.to_string());
            }
        }
    }
    seen
}

fn induced(g: &CausalDiagram, keep: &BTreeSet<String>) -> CausalDiagram {
    let nodes: Vec<String> = g
        .nodes()
        .iter()
        .filter(|n| keep.contains(*n))
        .cloned()
        .collect();
    let directed = g
        .directed()
        .iter()
        .filter(|(a, b)| keep.contains(a) && keep.contains(b))
        .cloned()
        .collect::<Vec<_>>();
    let bidirected = g
        .bidirected()
        .iter()
        .filter(|(a, b)| keep.contains(a) && keep.contains(b))
        .cloned()
        .collect::<Vec<_>>();
    CausalDiagram::new(nodes, directed, bidirected).expect("induced subgraph is valid")
}

/// Remove every edge with an arrowhead at a member of `x`.
fn cut_incoming(g: &CausalDiagram, x: &BTreeSet<String>) -> CausalDiagram {
    let directed = g
        .directed()
        .iter()
        .filter(|(_, b)| !x.contains(b))
        .cloned()
        .collect::<Vec<_>>();
    let bidirected = g
        .bidirected()
        .iter()
        .filter(|(a, b)| !x.contains(a) && !x.contains(b))
        .cloned()
        .collect::<Vec<_>>();
    CausalDiagram::new(g.nodes().to_vec(), directed, bidirected).expect("edge removal is valid")
}

/// Connected components under bidirected edges, ordered by first member.
fn c_components(g: &CausalDiagram) -> Vec<BTreeSet<String>> {
    let mut comps = Vec::new();
    let mut seen = BTreeSet::new();
    for node in g.nodes() {
        if seen.contains(node) {
            continue;
        }
        let mut comp = BTreeSet::new();
        let mut stack = vec![node.clone()];
        while let Some(n) = stack.pop() {
            if !seen.insert(n.clone()) {
                continue;
            }
            for m in g.bidirected_neighbors(&n) {
                stack.push(m.to_string());
            }
            comp.insert(n);
        }
        comps.push(comp);
    }
    comps
}

/// Deterministic topological order: among ready nodes, lowest original index
/// first.
fn topo_order(g: &CausalDiagram) -> Vec<String> {
    let nodes = g.nodes();
    let index: BTreeMap<&String, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut indegree = vec![0usize; nodes.len()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); nodes.len()];
    for (a, b) in g.directed() {
        indegree[index[b]] += 1;
        children[index[a]].push(index[b]);
    }
    let mut ready: BinaryHeap<Reverse<usize>> = indegree
        .iter()
        .enumerate()
        .filter(|(_, &d)| d == 0)
        .map(|(i, _)| Reverse(i))
        .collect();
    let mut order = Vec::with_capacity(nodes.len());
    while let Some(Reverse(i)) = ready.pop() {
        order.push(nodes[i].clone());
        for &c in &children[i] {
            indegree[c] -= 1;
            if indegree[c] == 0 {
                ready.push(Reverse(c));
            }
        }
    }
    debug_assert_eq!(order.len(), nodes.len());
    order
}
