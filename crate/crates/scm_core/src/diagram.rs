use std::collections::BTreeSet;

use petgraph::algo::toposort;
use petgraph::graph::DiGraph;
use serde::{Deserialize, Serialize};

use crate::error::ScmError;

/// Graph with directed and bidirected edges over named nodes.
///
/// Directed edges must be acyclic. Bidirected pairs are stored normalized
/// (smaller name first), so edge sets compare structurally.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CausalDiagram {
    nodes: Vec<String>,
    directed: BTreeSet<(String, String)>,
    bidirected: BTreeSet<(String, String)>,
}

#[derive(Serialize, Deserialize)]
struct DiagramFile {
    nodes: Vec<String>,
    directed: Vec<(String, String)>,
    bidirected: Vec<(String, String)>,
}

impl CausalDiagram {
    pub fn new(
        nodes: Vec<String>,
        directed: impl IntoIterator<Item = (String, String)>,
        bidirected: impl IntoIterator<Item = (String, String)>,
    ) -> Result<Self, ScmError> {
        let mut seen = BTreeSet::new();
        for n in &nodes {
            if !seen.insert(n.clone()) {
                return Err(ScmError::DuplicateName(n.clone()));
            }
        }
        let check = |n: &String| -> Result<(), ScmError> {
            if seen.contains(n) {
                Ok(())
            } else {
                Err(ScmError::UnknownNode(n.clone()))
            }
        };
        let mut dir = BTreeSet::new();
        for (a, b) in directed {
            check(&a)?;
            check(&b)?;
            if a == b {
                return Err(ScmError::SelfLoop(a));
            }
            dir.insert((a, b));
        }
        let mut bid = BTreeSet::new();
        for (a, b) in bidirected {
            check(&a)?;
            check(&b)?;
            if a == b {
                return Err(ScmError::SelfLoop(a));
            }
            bid.insert(if a < b { (a, b) } else { (b, a) });
        }

        let mut graph: DiGraph<(), ()> = DiGraph::new();
        let idx: std::collections::BTreeMap<&String, _> =
            nodes.iter().map(|n| (n, graph.add_node(()))).collect();
        for (a, b) in &dir {
            graph.add_edge(idx[a], idx[b], ());
        }
        if let Err(cycle) = toposort(&graph, None) {
            return Err(ScmError::CyclicDiagram(
                nodes[cycle.node_id().index()].clone(),
            ));
        }

        Ok(CausalDiagram {
            nodes,
            directed: dir,
            bidirected: bid,
        })
    }

    pub fn nodes(&self) -> &[String] {
        &self.nodes
    }

    pub fn has_node(&self, name: &str) -> bool {
        self.nodes.iter().any(|n| n == name)
    }

    pub fn directed(&self) -> &BTreeSet<(String, String)> {
        &self.directed
    }

    pub fn bidirected(&self) -> &BTreeSet<(String, String)> {
        &self.bidirected
    }

    pub fn parents(&self, node: &str) -> BTreeSet<&str> {
        self.directed
            .iter()
            .filter(|(_, b)| b == node)
            .map(|(a, _)| a.as_str())
            .collect()
    }

    pub fn children(&self, node: &str) -> BTreeSet<&str> {
        self.directed
            .iter()
            .filter(|(a, _)| a == node)
            .map(|(_, b)| b.as_str())
            .collect()
    }

    pub fn bidirected_neighbors(&self, node: &str) -> BTreeSet<&str> {
        self.bidirected
            .iter()
            .filter_map(|(a, b)| {
                if a == node {
                    Some(b.as_str())
                } else if b == node {
                    Some(a.as_str())
                } else {
                    None
                }
            })
            .collect()
    }

    pub fn has_bidirected(&self, a: &str, b: &str) -> bool {
        let key = if a < b { (a, b) } else { (b, a) };
        self.bidirected
            .iter()
            .any(|(x, y)| (x.as_str(), y.as_str()) == key)
    }
}

impl Serialize for CausalDiagram {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        DiagramFile {
            nodes: self.nodes.clone(),
            directed: self.directed.iter().cloned().collect(),
            bidirected: self.bidirected.iter().cloned().collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CausalDiagram {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let file = DiagramFile::deserialize(d)?;
        CausalDiagram::new(file.nodes, file.directed, file.bidirected)
            .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalizes_bidirected_pairs() {
        let g = CausalDiagram::new(
            vec!["A".into(), "B".into()],
            vec![],
            vec![("B".to_string(), "A".to_string())],
        )
        .unwrap();
        assert!(g.has_bidirected("A", "B"));
        assert!(g.has_bidirected("B", "A"));
        assert_eq!(g.bidirected().len(), 1);
    }

    #[test]
    fn rejects_directed_cycles() {
        let err = CausalDiagram::new(
            vec!["A".into(), "B".into()],
            vec![
                ("A".to_string(), "B".to_string()),
                ("B".to_string(), "A".to_string()),
            ],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, ScmError::CyclicDiagram(_)));
    }

    #[test]
    fn rejects_unknown_endpoints() {
        let err = CausalDiagram::new(
            vec!["A".into()],
            vec![("A".to_string(), "Z".to_string())],
            vec![],
        )
        .unwrap_err();
        assert!(matches!(err, ScmError::UnknownNode(_)));
    }
}
