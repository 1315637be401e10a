use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Undirected graph of non-causal constraints between variables: an edge
/// means the pair may not be split across clusters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NonCausalGraph {
    nodes: Vec<String>,
    edges: BTreeSet<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct NonCausalFile {
    nodes: Vec<String>,
    edges: Vec<(String, String)>,
}

impl NonCausalGraph {
    pub fn new(
        nodes: Vec<String>,
        edges: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, GraphError> {
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.clone()) {
                return Err(GraphError::ClusterInvalid(format!(
                    "node `{n}` listed twice"
                )));
            }
        }
        let mut normalized = BTreeSet::new();
        for (a, b) in edges {
            if !seen.contains(&a) {
                return Err(GraphError::UnknownVariable(a));
            }
            if !seen.contains(&b) {
                return Err(GraphError::UnknownVariable(b));
            }
            if a == b {
                return Err(GraphError::ClusterInvalid(format!("self-loop at `{a}`")));
            }
            normalized.insert(if a < b { (a, b) } else { (b, a) });
        }
        Ok(NonCausalGraph {
            nodes,
            edges: normalized,
        })
    }

    pub fn empty(nodes: Vec<String>) -> Self {
        NonCausalGraph {
            nodes,
            edges: BTreeSet::new(),
        }
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn edges(&self) -> &BTreeSet<(String, String)> {
        &self.edges
    }

    pub fn has_edge(&self, a: &str, b: &str) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.edges
            .iter()
            .any(|(x, y)| (x.as_str(), y.as_str()) == key)
    }

    /// Connected components in node order (each component ordered by first
    /// appearance; isolated nodes form singletons).
    pub fn components(&self) -> Vec<Vec<String>> {
        let index: BTreeMap<&String, usize> =
            self.nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for (a, b) in &self.edges {
            let (i, j) = (index[a], index[b]);
            adj[i].push(j);
            adj[j].push(i);
        }
        let mut component = vec![usize::MAX; self.nodes.len()];
        let mut out: Vec<Vec<String>> = Vec::new();
        for start in 0..self.nodes.len() {
            if component[start] != usize::MAX {
                continue;
            }
            let id = out.len();
            let mut stack = vec![start];
            let mut members = Vec::new();
            component[start] = id;
            while let Some(v) = stack.pop() {
                members.push(v);
                for &w in &adj[v] {
                    if component[w] == usize::MAX {
                        component[w] = id;
                        stack.push(w);
                    }
                }
            }
            members.sort_unstable();
            out.push(members.into_iter().map(|i| self.nodes[i].clone()).collect());
        }
        out
    }
}

impl Serialize for NonCausalGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        NonCausalFile {
            nodes: self.nodes.clone(),
            edges: self.edges.iter().cloned().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for NonCausalGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = NonCausalFile::deserialize(d)?;
        NonCausalGraph::new(file.nodes, file.edges).map_err(serde::de::Error::custom)
    }
}
