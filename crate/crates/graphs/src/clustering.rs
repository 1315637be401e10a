use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// One named cluster of variables. Member order is meaningful: joint values
/// over the cluster are always written in this order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub name: String,
    pub members: Vec<String>,
}

/// A partition of a *subset* of a model's variables into disjoint, non-empty,
/// named clusters. Variables in no cluster are projected away by the
/// operations that consume clusterings.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InterClustering {
    clusters: Vec<Cluster>,
}

impl InterClustering {
    pub fn new(clusters: Vec<Cluster>) -> Result<Self, GraphError> {
        let mut names = BTreeSet::new();
        let mut members = BTreeSet::new();
        for c in &clusters {
            if !names.insert(c.name.clone()) {
                return Err(GraphError::ClusterInvalid(format!(
                    "cluster name `{}` appears twice",
                    c.name
                )));
            }
            if c.members.is_empty() {
                return Err(GraphError::ClusterInvalid(format!(
                    "cluster `{}` is empty",
                    c.name
                )));
            }
            for m in &c.members {
                if !members.insert(m.clone()) {
                    return Err(GraphError::ClusterInvalid(format!(
                        "variable `{m}` belongs to more than one cluster"
                    )));
                }
            }
        }
        Ok(InterClustering { clusters })
    }

    /// Singleton cluster per variable, named after the variable.
    pub fn singletons(vars: &[String]) -> Self {
        InterClustering {
            clusters: vars
                .iter()
                .map(|v| Cluster {
                    name: v.clone(),
                    members: vec![v.clone()],
                })
                .collect(),
        }
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    pub fn cluster(&self, name: &str) -> Option<&Cluster> {
        self.clusters.iter().find(|c| c.name == name)
    }

    /// Name of the cluster containing `var`, if any.
    pub fn cluster_of(&self, var: &str) -> Option<&str> {
        self.clusters
            .iter()
            .find(|c| c.members.iter().any(|m| m == var))
            .map(|c| c.name.as_str())
    }

    /// All clustered variables.
    pub fn covered(&self) -> BTreeSet<String> {
        self.clusters
            .iter()
            .flat_map(|c| c.members.iter().cloned())
            .collect()
    }

    pub fn member_sets(&self) -> Vec<BTreeSet<String>> {
        self.clusters
            .iter()
            .map(|c| c.members.iter().cloned().collect())
            .collect()
    }

    /// True when every cluster of `finer` is either disjoint from this
    /// clustering's coverage or contained in one of its clusters.
    pub fn coarser_than(&self, finer: &InterClustering) -> bool {
        let covered = self.covered();
        finer.clusters.iter().all(|fc| {
            let fset: BTreeSet<&String> = fc.members.iter().collect();
            if fset.iter().all(|m| !covered.contains(*m)) {
                return true;
            }
            self.clusters.iter().any(|c| {
                let cset: BTreeSet<&String> = c.members.iter().collect();
                fset.is_subset(&cset)
            })
        })
    }

    /// The var-set is expressible as a union of clusters: report those
    /// cluster names, or None when it is not a union.
    pub fn covering_clusters(&self, vars: &BTreeSet<String>) -> Option<BTreeSet<String>> {
        let mut picked = BTreeSet::new();
        let mut covered: BTreeSet<&String> = BTreeSet::new();
        for c in &self.clusters {
            if c.members.iter().any(|m| vars.contains(m)) {
                if !c.members.iter().all(|m| vars.contains(m)) {
                    return None;
                }
                picked.insert(c.name.clone());
                covered.extend(c.members.iter());
            }
        }
        if vars.iter().all(|v| covered.contains(v)) {
            Some(picked)
        } else {
            None
        }
    }
}

impl Serialize for InterClustering {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.clusters.serialize(s)
    }
}

impl<'de> Deserialize<'de> for InterClustering {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let clusters = Vec::<Cluster>::deserialize(d)?;
        InterClustering::new(clusters).map_err(serde::de::Error::custom)
    }
}
