//! Selecting a variable clustering that can answer a family of queries.
//!
//! The search runs between two bounds: the finest clustering the model's
//! non-causal constraints allow, and the coarsest clustering the queries
//! can tolerate. Starting from the finest, clusters are greedily merged as
//! long as the result stays admissible and every query remains
//! identifiable at cluster level. The result is locally maximal for the
//! merge moves considered; no merge across a query boundary is ever tried.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use scm_core::{CausalDiagram, CtfQuery};

use crate::cdag::{check_admissible, induce_cdag, Cdag};
use crate::clustering::{Cluster, InterClustering};
use crate::error::GraphError;
use crate::identify::{as_interventional, identify_sets};
use crate::noncausal::NonCausalGraph;

/// Decides whether a query is answerable in a cluster diagram.
pub trait IdOracle {
    fn query_identifiable(
        &self,
        cdag: &Cdag,
        clustering: &InterClustering,
        query: &CtfQuery,
    ) -> Result<bool, GraphError>;
}

/// Maps a single-world query onto clusters and runs interventional
/// identification on the cluster diagram. Conditional and multi-world
/// queries are reported as unsupported rather than guessed at.
pub struct InterventionalIdOracle;

impl IdOracle for InterventionalIdOracle {
    fn query_identifiable(
        &self,
        cdag: &Cdag,
        clustering: &InterClustering,
        query: &CtfQuery,
    ) -> Result<bool, GraphError> {
        let iq = as_interventional(query)?;
        let Some(y) = clustering.covering_clusters(&iq.outcomes) else {
            return Ok(false);
        };
        let x = if iq.interventions.is_empty() {
            BTreeSet::new()
        } else {
            match clustering.covering_clusters(&iq.interventions) {
                Some(x) => x,
                None => return Ok(false),
            }
        };
        if y.intersection(&x).next().is_some() {
            return Ok(false);
        }
        Ok(identify_sets(&cdag.diagram, &y, &x)?.identifiable)
    }
}

/// The variable sets a query family constrains: per query and per world,
/// the set of outcome variables and, when present, the set of intervened
/// variables. Conditioning events count as outcomes of their world.
pub fn query_variable_sets(queries: &[CtfQuery]) -> Vec<BTreeSet<String>> {
    let mut sets: BTreeSet<BTreeSet<String>> = BTreeSet::new();
    for q in queries {
        let mut worlds: BTreeMap<&[(String, scm_core::Value)], BTreeSet<String>> = BTreeMap::new();
        for e in q.events.iter().chain(q.given.iter()) {
            worlds
                .entry(e.intervention.as_slice())
                .or_default()
                .insert(e.var.clone());
        }
        for (intervention, outcomes) in worlds {
            sets.insert(outcomes);
            if !intervention.is_empty() {
                sets.insert(intervention.iter().map(|(v, _)| v.clone()).collect());
            }
        }
    }
    sets.into_iter().collect()
}

/// Coarsest clustering under which every query variable set is a union of
/// clusters: variables are grouped by the exact family of query sets they
/// belong to. Variables in no query set are left unclustered.
pub fn max_answerable_clustering(
    nodes: &[String],
    queries: &[CtfQuery],
) -> Result<InterClustering, GraphError> {
    let sets = query_variable_sets(queries);
    for s in &sets {
        for v in s {
            if !nodes.contains(v) {
                return Err(GraphError::UnknownVariable(v.clone()));
            }
        }
    }
    let mut profile: BTreeMap<&String, Vec<usize>> = BTreeMap::new();
    for (i, s) in sets.iter().enumerate() {
        for v in s {
            profile.entry(v).or_default().push(i);
        }
    }
    let mut groups: BTreeMap<Vec<usize>, Vec<String>> = BTreeMap::new();
    for (v, p) in profile {
        groups.entry(p).or_default().push(v.clone());
    }
    Ok(canonical_clustering(nodes, groups.into_values()))
}

/// Finest admissible clustering that respects the non-causal constraints:
/// components of the non-causal graph, with groups linked by directed
/// cycles at group level condensed together. Covers every variable.
pub fn min_clustering(
    g: &CausalDiagram,
    gbar: &NonCausalGraph,
) -> Result<InterClustering, GraphError> {
    let gset: BTreeSet<&String> = g.nodes().iter().collect();
    let bset: BTreeSet<&String> = gbar.nodes().iter().collect();
    if gset != bset {
        return Err(GraphError::ClusterInvalid(
            "non-causal graph and causal diagram cover different variables".into(),
        ));
    }

    let comps = gbar.components();
    let index: BTreeMap<&String, usize> = g.nodes().iter().enumerate().map(|(i, n)| (n, i)).collect();
    let group_of: BTreeMap<&String, usize> = comps
        .iter()
        .enumerate()
        .flat_map(|(gi, members)| members.iter().map(move |m| (m, gi)))
        .collect();

    // Descendant sets per node, then the path relation between groups.
    let n = g.nodes().len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in g.directed() {
        children[index[a]].push(index[b]);
    }
    let mut quotient: DiGraph<(), ()> = DiGraph::new();
    let qnodes: Vec<_> = (0..comps.len()).map(|_| quotient.add_node(())).collect();
    for (gi, members) in comps.iter().enumerate() {
        let mut seen = BTreeSet::new();
        let mut stack: Vec<usize> = members.iter().flat_map(|m| children[index[m]].iter().copied()).collect();
        while let Some(v) = stack.pop() {
            if seen.insert(v) {
                stack.extend(children[v].iter().copied());
            }
        }
        let targets: BTreeSet<usize> = seen
            .iter()
            .map(|&v| group_of[&g.nodes()[v]])
            .filter(|&gj| gj != gi)
            .collect();
        for gj in targets {
            quotient.add_edge(qnodes[gi], qnodes[gj], ());
        }
    }

    // Condensing the path quotient once is enough: the condensation of a
    // digraph is acyclic.
    let mut merged: Vec<Vec<String>> = Vec::new();
    for scc in tarjan_scc(&quotient) {
        let mut members = Vec::new();
        for node in scc {
            members.extend(comps[node.index()].iter().cloned());
        }
        merged.push(members);
    }
    Ok(canonical_clustering(g.nodes(), merged))
}

/// A clustering answers the queries when it is admissible, every query
/// variable set is an exact union of clusters, and every query is
/// identifiable in the induced cluster diagram.
pub fn is_valid_choice(
    g: &CausalDiagram,
    clustering: &InterClustering,
    queries: &[CtfQuery],
    oracle: &dyn IdOracle,
) -> Result<bool, GraphError> {
    if !check_admissible(g, clustering)? {
        return Ok(false);
    }
    for s in &query_variable_sets(queries) {
        if clustering.covering_clusters(s).is_none() {
            return Ok(false);
        }
    }
    let cdag = induce_cdag(g, clustering)?;
    for q in queries {
        if !oracle.query_identifiable(&cdag, clustering, q)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Greedy coarsening from the finest feasible clustering: within each cell
/// of the coarsest answerable clustering, merge cluster pairs whenever the
/// merge stays valid, rescanning after every success.
pub fn choose_clusters(
    g: &CausalDiagram,
    gbar: &NonCausalGraph,
    queries: &[CtfQuery],
    oracle: &dyn IdOracle,
) -> Result<InterClustering, GraphError> {
    let bc_min = min_clustering(g, gbar)?;
    let bc_max = max_answerable_clustering(g.nodes(), queries)?;
    if !bc_max.coarser_than(&bc_min) {
        return Err(GraphError::ChooseFailed(
            "a query needs finer granularity than the non-causal constraints allow".into(),
        ));
    }
    if !is_valid_choice(g, &bc_min, queries, oracle)? {
        return Err(GraphError::ChooseFailed(
            "the finest feasible clustering cannot answer the queries".into(),
        ));
    }

    let max_cells = bc_max.member_sets();
    let mut current: Vec<Vec<String>> = bc_min
        .clusters()
        .iter()
        .map(|c| c.members.clone())
        .collect();

    'rescan: loop {
        for cell in &max_cells {
            let inside: Vec<usize> = current
                .iter()
                .enumerate()
                .filter(|(_, members)| members.iter().all(|v| cell.contains(v)))
                .map(|(i, _)| i)
                .collect();
            for (a, &i) in inside.iter().enumerate() {
                for &j in &inside[a + 1..] {
                    let mut groups = current.clone();
                    let mut merged = groups[i].clone();
                    merged.extend(groups[j].iter().cloned());
                    groups.remove(j);
                    groups.remove(i);
                    groups.push(merged);
                    let trial = canonical_clustering(g.nodes(), groups);
                    if is_valid_choice(g, &trial, queries, oracle)? {
                        current = trial
                            .clusters()
                            .iter()
                            .map(|c| c.members.clone())
                            .collect();
                        continue 'rescan;
                    }
                }
            }
        }
        break;
    }
    Ok(canonical_clustering(g.nodes(), current))
}

/// Clusters named C1..Ck, members in diagram order, clusters ordered by
/// their first member.
pub(crate) fn canonical_clustering(
    nodes: &[String],
    groups: impl IntoIterator<Item = Vec<String>>,
) -> InterClustering {
    let index: BTreeMap<&String, usize> = nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
    let mut cells: Vec<Vec<String>> = groups
        .into_iter()
        .filter(|g| !g.is_empty())
        .map(|mut g| {
            g.sort_by_key(|v| index[v]);
            g
        })
        .collect();
    cells.sort_by_key(|g| index[&g[0]]);
    InterClustering::new(
        cells
            .into_iter()
            .enumerate()
            .map(|(i, members)| Cluster {
                name: format!("C{}", i + 1),
                members,
            })
            .collect(),
    )
    .expect("groups are disjoint and non-empty")
}
