//! On-disk graph format: one JSON object carrying the causal diagram and,
//! optionally, the non-causal constraint edges over the same nodes.

use scm_core::CausalDiagram;
use serde::{Deserialize, Serialize};

use crate::error::GraphError;
use crate::noncausal::NonCausalGraph;

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct GraphFile {
    pub nodes: Vec<String>,
    #[serde(default)]
    pub directed: Vec<(String, String)>,
    #[serde(default)]
    pub bidirected: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub noncausal: Vec<(String, String)>,
}

impl GraphFile {
    pub fn diagram(&self) -> Result<CausalDiagram, GraphError> {
        Ok(CausalDiagram::new(
            self.nodes.clone(),
            self.directed.clone(),
            self.bidirected.clone(),
        )?)
    }

    pub fn noncausal_graph(&self) -> Result<NonCausalGraph, GraphError> {
        if self.noncausal.is_empty() {
            return Ok(NonCausalGraph::empty(self.nodes.clone()));
        }
        NonCausalGraph::new(self.nodes.clone(), self.noncausal.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optional_sections_default_to_empty() {
        let f: GraphFile = serde_json::from_str(r#"{"nodes": ["A", "B"]}"#).unwrap();
        let g = f.diagram().unwrap();
        assert_eq!(g.nodes(), &["A".to_string(), "B".to_string()]);
        assert!(g.directed().is_empty());
        let nc = f.noncausal_graph().unwrap();
        assert!(nc.edges().is_empty());
    }

    #[test]
    fn edge_lists_parse_as_pairs() {
        let f: GraphFile = serde_json::from_str(
            r#"{"nodes": ["A", "B", "C"],
                "directed": [["A", "B"]],
                "bidirected": [["A", "C"]],
                "noncausal": [["B", "C"]]}"#,
        )
        .unwrap();
        let g = f.diagram().unwrap();
        assert!(g.has_bidirected("A", "C"));
        let nc = f.noncausal_graph().unwrap();
        assert!(nc.has_edge("C", "B"));
    }
}
