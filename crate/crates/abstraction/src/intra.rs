use std::collections::{BTreeMap, BTreeSet, VecDeque};

use scm_core::{joint_assignments, Domain, Value};
use serde::{Deserialize, Serialize};

use crate::error::AbstractionError;

/// One high-level value of a cluster: `label` names the value and `values`
/// lists the low-level member tuples (cluster member order) it stands for.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IntraBlock {
    pub label: Value,
    pub values: Vec<Vec<Value>>,
}

/// The value partition of a single cluster.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterBlocks {
    pub cluster: String,
    pub blocks: Vec<IntraBlock>,
}

/// Per-cluster value partitions. Block order is meaningful: it fixes the
/// order of the high-level domain built from the labels.
///
/// Construction checks everything that can be checked without variable
/// domains (distinct labels, consistent tuple widths, no tuple in two
/// blocks). Whether the blocks cover the full joint domain is checked when
/// a concrete model is in hand.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ClusterBlocks>", into = "Vec<ClusterBlocks>")]
pub struct IntraClustering {
    per_cluster: Vec<ClusterBlocks>,
}

impl IntraClustering {
    pub fn new(per_cluster: Vec<ClusterBlocks>) -> Result<Self, AbstractionError> {
        let mut names = BTreeSet::new();
        for entry in &per_cluster {
            if !names.insert(entry.cluster.clone()) {
                return Err(AbstractionError::ClusterInvalid(format!(
                    "duplicate block list for cluster {}",
                    entry.cluster
                )));
            }
            if entry.blocks.is_empty() {
                return Err(AbstractionError::ClusterInvalid(format!(
                    "cluster {} has no blocks",
                    entry.cluster
                )));
            }
            let mut labels = BTreeSet::new();
            let mut seen_tuples: BTreeSet<&Vec<Value>> = BTreeSet::new();
            let width = entry.blocks[0].values.first().map(|t| t.len());
            for block in &entry.blocks {
                if !labels.insert(block.label) {
                    return Err(AbstractionError::ClusterInvalid(format!(
                        "cluster {} repeats label {}",
                        entry.cluster, block.label
                    )));
                }
                if block.values.is_empty() {
                    return Err(AbstractionError::ClusterInvalid(format!(
                        "cluster {} block {} is empty",
                        entry.cluster, block.label
                    )));
                }
                for tuple in &block.values {
                    if Some(tuple.len()) != width {
                        return Err(AbstractionError::ClusterInvalid(format!(
                            "cluster {} mixes tuple widths",
                            entry.cluster
                        )));
                    }
                    if !seen_tuples.insert(tuple) {
                        return Err(AbstractionError::ClusterInvalid(format!(
                            "cluster {} assigns {:?} to two blocks",
                            entry.cluster, tuple
                        )));
                    }
                }
            }
        }
        Ok(IntraClustering { per_cluster })
    }

    /// Singleton blocks over the given member domains: every joint tuple is
    /// its own high-level value. Single-member clusters keep their values as
    /// labels (an identity renaming); wider clusters are labeled by the
    /// tuple's position in joint enumeration order.
    pub fn singleton_blocks(
        clusters: &[(String, Vec<Domain>)],
    ) -> Result<Self, AbstractionError> {
        let mut per_cluster = Vec::new();
        for (name, domains) in clusters {
            let refs: Vec<&Domain> = domains.iter().collect();
            let tuples = joint_assignments(&refs);
            let blocks = tuples
                .into_iter()
                .enumerate()
                .map(|(i, tuple)| IntraBlock {
                    label: if domains.len() == 1 { tuple[0] } else { i as Value },
                    values: vec![tuple],
                })
                .collect();
            per_cluster.push(ClusterBlocks {
                cluster: name.clone(),
                blocks,
            });
        }
        IntraClustering::new(per_cluster)
    }

    pub fn entries(&self) -> &[ClusterBlocks] {
        &self.per_cluster
    }

    pub fn blocks_for(&self, cluster: &str) -> Option<&[IntraBlock]> {
        self.per_cluster
            .iter()
            .find(|e| e.cluster == cluster)
            .map(|e| e.blocks.as_slice())
    }
}

impl TryFrom<Vec<ClusterBlocks>> for IntraClustering {
    type Error = AbstractionError;

    fn try_from(v: Vec<ClusterBlocks>) -> Result<Self, Self::Error> {
        IntraClustering::new(v)
    }
}

impl From<IntraClustering> for Vec<ClusterBlocks> {
    fn from(c: IntraClustering) -> Self {
        c.per_cluster
    }
}

/// Blocks for one cluster from symmetry generators: the orbits of the group
/// the generators produce. Labels follow the orbits' first appearance in
/// joint enumeration order.
///
/// If every mechanism consuming the cluster is invariant under each
/// generator, the resulting blocks pass the invariance check for any
/// abstraction built on them.
pub fn orbit_intra_clustering(
    domains: &[Domain],
    generators: &[BTreeMap<Vec<Value>, Vec<Value>>],
) -> Result<Vec<IntraBlock>, AbstractionError> {
    let refs: Vec<&Domain> = domains.iter().collect();
    let tuples = joint_assignments(&refs);
    let tuple_set: BTreeSet<&Vec<Value>> = tuples.iter().collect();

    for (i, g) in generators.iter().enumerate() {
        let keys: BTreeSet<&Vec<Value>> = g.keys().collect();
        let image: BTreeSet<&Vec<Value>> = g.values().collect();
        if keys != tuple_set {
            return Err(AbstractionError::NonBijectiveGenerator(format!(
                "generator {i} is not defined on the whole joint domain"
            )));
        }
        if image != tuple_set {
            return Err(AbstractionError::NonBijectiveGenerator(format!(
                "generator {i} is not a permutation of the joint domain"
            )));
        }
    }

    // Finite bijections have finite order, so forward closure alone reaches
    // the whole group orbit.
    let mut assigned: BTreeSet<Vec<Value>> = BTreeSet::new();
    let mut blocks = Vec::new();
    for start in &tuples {
        if assigned.contains(start) {
            continue;
        }
        let mut orbit: BTreeSet<Vec<Value>> = BTreeSet::new();
        let mut queue = VecDeque::from([start.clone()]);
        while let Some(t) = queue.pop_front() {
            if !orbit.insert(t.clone()) {
                continue;
            }
            for g in generators {
                queue.push_back(g[&t].clone());
            }
        }
        assigned.extend(orbit.iter().cloned());
        // Keep the rows in joint enumeration order, not BTreeSet order: the
        // two differ when domains list values out of numeric order.
        let rows: Vec<Vec<Value>> = tuples.iter().filter(|t| orbit.contains(*t)).cloned().collect();
        blocks.push(IntraBlock {
            label: blocks.len() as Value,
            values: rows,
        });
    }
    Ok(blocks)
}
