//! Cluster diagrams: the quotient of a causal diagram under an admissible
//! variable clustering.

use std::collections::{BTreeMap, BTreeSet};

use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use scm_core::CausalDiagram;
use serde::{Deserialize, Serialize};

use crate::clustering::InterClustering;
use crate::error::GraphError;
use crate::project::latent_projection;

/// Causal diagram whose nodes are cluster names.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cdag {
    pub diagram: CausalDiagram,
}

/// A clustering is admissible when the clusters can be topologically
/// ordered: no directed path may leave a cluster and return to it, whether
/// it travels through other clusters or through unclustered variables.
pub fn check_admissible(g: &CausalDiagram, clustering: &InterClustering) -> Result<bool, GraphError> {
    let index: BTreeMap<&String, usize> = g.nodes().iter().enumerate().map(|(i, n)| (n, i)).collect();
    for c in clustering.clusters() {
        for m in &c.members {
            if !index.contains_key(m) {
                return Err(GraphError::UnknownVariable(m.clone()));
            }
        }
    }

    let n = g.nodes().len();
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (a, b) in g.directed() {
        children[index[a]].push(index[b]);
    }
    // reachable[v] = descendants of v (not reflexive)
    let reachable: Vec<BTreeSet<usize>> = (0..n)
        .map(|start| {
            let mut seen = BTreeSet::new();
            let mut stack = children[start].clone();
            while let Some(v) = stack.pop() {
                if seen.insert(v) {
                    stack.extend(children[v].iter().copied());
                }
            }
            seen
        })
        .collect();

    let member_idx: Vec<BTreeSet<usize>> = clustering
        .clusters()
        .iter()
        .map(|c| c.members.iter().map(|m| index[m]).collect())
        .collect();

    // A path out of a cluster and back: some child of a member lies outside
    // the cluster yet reaches back into it.
    for members in &member_idx {
        for &m in members {
            for &c in &children[m] {
                if !members.contains(&c) && reachable[c].intersection(members).next().is_some() {
                    return Ok(false);
                }
            }
        }
    }

    // Quotient of the reachability relation must be acyclic.
    let k = member_idx.len();
    let mut quotient: DiGraph<(), ()> = DiGraph::new();
    let qnodes: Vec<_> = (0..k).map(|_| quotient.add_node(())).collect();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let reaches = member_idx[i]
                .iter()
                .any(|&a| reachable[a].intersection(&member_idx[j]).next().is_some());
            if reaches {
                quotient.add_edge(qnodes[i], qnodes[j], ());
            }
        }
    }
    Ok(toposort(&quotient, None).is_ok())
}

/// Quotient `g` by `clustering`: unclustered variables are latent-projected
/// away first, then clusters inherit every directed or bidirected edge
/// between members of distinct clusters. Fails when the clustering is not
/// admissible (the quotient would be cyclic).
pub fn induce_cdag(g: &CausalDiagram, clustering: &InterClustering) -> Result<Cdag, GraphError> {
    if !check_admissible(g, clustering)? {
        return Err(GraphError::ClusterInvalid(
            "clustering is not admissible".into(),
        ));
    }
    let covered = clustering.covered();
    let projected = latent_projection(g, &covered);

    let cluster_of: BTreeMap<&String, &str> = clustering
        .clusters()
        .iter()
        .flat_map(|c| c.members.iter().map(move |m| (m, c.name.as_str())))
        .collect();

    let nodes: Vec<String> = clustering
        .clusters()
        .iter()
        .map(|c| c.name.clone())
        .collect();
    let mut directed = BTreeSet::new();
    for (a, b) in projected.directed() {
        let (ca, cb) = (cluster_of[a], cluster_of[b]);
        if ca != cb {
            directed.insert((ca.to_string(), cb.to_string()));
        }
    }
    let mut bidirected = BTreeSet::new();
    for (a, b) in projected.bidirected() {
        let (ca, cb) = (cluster_of[a], cluster_of[b]);
        if ca != cb {
            let (x, y) = if ca < cb { (ca, cb) } else { (cb, ca) };
            bidirected.insert((x.to_string(), y.to_string()));
        }
    }
    let diagram = CausalDiagram::new(nodes, directed, bidirected)?;
    Ok(Cdag { diagram })
}
