use std::collections::BTreeMap;

use graphs::InterClustering;
use scm_core::{joint_assignments, Domain, Value, Variable};

use crate::error::AbstractionError;
use crate::intra::{IntraBlock, IntraClustering};

/// Value map from low-level assignments to high-level ones: one subfunction
/// per cluster, each a block lookup. Variables outside every cluster are
/// projected away.
///
/// Clusters and high variables are in bijection (cluster name = variable
/// name), as are each cluster's blocks and the high variable's domain
/// values (block label = domain value, in block order).
#[derive(Clone, Debug)]
pub struct ConstructiveTau {
    inter: InterClustering,
    intra: IntraClustering,
    // parallel to inter.clusters()
    high: Vec<Variable>,
}

pub fn build_tau(
    inter: &InterClustering,
    intra: &IntraClustering,
) -> Result<ConstructiveTau, AbstractionError> {
    for entry in intra.entries() {
        let cluster = inter
            .cluster(&entry.cluster)
            .ok_or_else(|| AbstractionError::UnknownCluster(entry.cluster.clone()))?;
        for block in &entry.blocks {
            for tuple in &block.values {
                if tuple.len() != cluster.members.len() {
                    return Err(AbstractionError::ClusterInvalid(format!(
                        "cluster {} has {} members but a block tuple of width {}",
                        entry.cluster,
                        cluster.members.len(),
                        tuple.len()
                    )));
                }
            }
        }
    }
    let mut high = Vec::new();
    for cluster in inter.clusters() {
        let blocks = intra.blocks_for(&cluster.name).ok_or_else(|| {
            AbstractionError::ClusterInvalid(format!("cluster {} has no blocks", cluster.name))
        })?;
        let labels = blocks.iter().map(|b| b.label).collect();
        high.push(Variable {
            name: cluster.name.clone(),
            domain: Domain::new(labels),
        });
    }
    Ok(ConstructiveTau {
        inter: inter.clone(),
        intra: intra.clone(),
        high,
    })
}

impl ConstructiveTau {
    pub fn inter(&self) -> &InterClustering {
        &self.inter
    }

    pub fn intra(&self) -> &IntraClustering {
        &self.intra
    }

    /// High-level variables, one per cluster, in cluster order.
    pub fn high_variables(&self) -> &[Variable] {
        &self.high
    }

    pub fn high_variable(&self, cluster: &str) -> Result<&Variable, AbstractionError> {
        self.high
            .iter()
            .find(|v| v.name == cluster)
            .ok_or_else(|| AbstractionError::UnknownCluster(cluster.to_string()))
    }

    fn blocks(&self, cluster: &str) -> Result<&[IntraBlock], AbstractionError> {
        self.intra
            .blocks_for(cluster)
            .ok_or_else(|| AbstractionError::UnknownCluster(cluster.to_string()))
    }

    /// The label of the block holding `tuple` (cluster member order).
    pub fn cluster_value(&self, cluster: &str, tuple: &[Value]) -> Result<Value, AbstractionError> {
        for block in self.blocks(cluster)? {
            if block.values.iter().any(|t| t == tuple) {
                return Ok(block.label);
            }
        }
        Err(AbstractionError::ClusterInvalid(format!(
            "cluster {cluster} has no block containing {tuple:?}"
        )))
    }

    /// All member tuples mapping to `label`.
    pub fn preimage(&self, cluster: &str, label: Value) -> Result<&[Vec<Value>], AbstractionError> {
        for block in self.blocks(cluster)? {
            if block.label == label {
                return Ok(&block.values);
            }
        }
        Err(AbstractionError::ClusterInvalid(format!(
            "cluster {cluster} has no block labeled {label}"
        )))
    }

    /// The first preimage tuple of `label` in member-domain enumeration
    /// order. The invariance condition makes any representative equivalent;
    /// fixing the first keeps outputs reproducible.
    pub fn lex_first_preimage(
        &self,
        cluster: &str,
        label: Value,
        member_domains: &[&Domain],
    ) -> Result<Vec<Value>, AbstractionError> {
        let rows = self.preimage(cluster, label)?;
        let rank = |tuple: &Vec<Value>| -> Result<Vec<usize>, AbstractionError> {
            tuple
                .iter()
                .zip(member_domains)
                .map(|(&v, d)| {
                    d.index_of(v).ok_or_else(|| {
                        AbstractionError::ClusterInvalid(format!(
                            "cluster {cluster} block {label} uses out-of-domain value {v}"
                        ))
                    })
                })
                .collect()
        };
        let mut best: Option<(Vec<usize>, &Vec<Value>)> = None;
        for row in rows {
            let key = rank(row)?;
            if best.as_ref().is_none_or(|(k, _)| key < *k) {
                best = Some((key, row));
            }
        }
        Ok(best.expect("blocks are non-empty").1.clone())
    }

    /// Checks that every cluster's blocks exactly tile the joint domain of
    /// its members under `variables`.
    pub fn check_coverage(&self, variables: &[Variable]) -> Result<(), AbstractionError> {
        for cluster in self.inter.clusters() {
            let mut domains = Vec::new();
            for m in &cluster.members {
                let var = variables
                    .iter()
                    .find(|v| v.name == *m)
                    .ok_or_else(|| AbstractionError::UnknownVariable(m.clone()))?;
                domains.push(&var.domain);
            }
            let tuples = joint_assignments(&domains);
            let blocks = self.blocks(&cluster.name)?;
            let mut count = 0usize;
            for block in blocks {
                for tuple in &block.values {
                    if !tuples.contains(tuple) {
                        return Err(AbstractionError::ClusterInvalid(format!(
                            "cluster {} block {} lists {:?}, not a joint member value",
                            cluster.name, block.label, tuple
                        )));
                    }
                    count += 1;
                }
            }
            // No duplicates across blocks (construction invariant), so a
            // count match means exact cover.
            if count != tuples.len() {
                return Err(AbstractionError::ClusterInvalid(format!(
                    "cluster {} blocks cover {} of {} joint values",
                    cluster.name,
                    count,
                    tuples.len()
                )));
            }
        }
        Ok(())
    }
}

/// Maps an assignment through τ. The clustered part of `v` must cover each
/// touched cluster completely; variables outside every cluster are ignored.
pub fn apply_tau(
    tau: &ConstructiveTau,
    v: &BTreeMap<String, Value>,
) -> Result<BTreeMap<String, Value>, AbstractionError> {
    let mut out = BTreeMap::new();
    for cluster in tau.inter().clusters() {
        let present: Vec<&String> = cluster.members.iter().filter(|m| v.contains_key(*m)).collect();
        if present.is_empty() {
            continue;
        }
        if present.len() != cluster.members.len() {
            return Err(AbstractionError::MisalignedQuery(format!(
                "assignment splits cluster {}: only {:?} of {:?} present",
                cluster.name, present, cluster.members
            )));
        }
        let tuple: Vec<Value> = cluster.members.iter().map(|m| v[m]).collect();
        out.insert(cluster.name.clone(), tau.cluster_value(&cluster.name, &tuple)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use graphs::Cluster;

    use super::*;
    use crate::intra::ClusterBlocks;

    fn two_cluster_tau() -> ConstructiveTau {
        let inter = InterClustering::new(vec![
            Cluster { name: "X".into(), members: vec!["A".into(), "B".into()] },
            Cluster { name: "Y".into(), members: vec!["Y".into()] },
        ])
        .unwrap();
        let intra = IntraClustering::new(vec![
            ClusterBlocks {
                cluster: "X".into(),
                blocks: vec![
                    IntraBlock { label: 0, values: vec![vec![0, 0], vec![0, 1], vec![1, 0]] },
                    IntraBlock { label: 1, values: vec![vec![1, 1]] },
                ],
            },
            ClusterBlocks {
                cluster: "Y".into(),
                blocks: vec![
                    IntraBlock { label: 0, values: vec![vec![0]] },
                    IntraBlock { label: 1, values: vec![vec![1]] },
                ],
            },
        ])
        .unwrap();
        build_tau(&inter, &intra).unwrap()
    }

    #[test]
    fn unclustered_variables_are_projected_away() {
        let tau = two_cluster_tau();
        let v: BTreeMap<String, Value> =
            [("R".into(), 1), ("A".into(), 0), ("B".into(), 1), ("Y".into(), 1)].into();
        let high = apply_tau(&tau, &v).unwrap();
        assert_eq!(high, [("X".into(), 0), ("Y".into(), 1)].into());
    }

    #[test]
    fn partial_cluster_is_rejected() {
        let tau = two_cluster_tau();
        let v: BTreeMap<String, Value> = [("A".into(), 0), ("Y".into(), 1)].into();
        assert!(matches!(
            apply_tau(&tau, &v),
            Err(AbstractionError::MisalignedQuery(_))
        ));
    }

    #[test]
    fn lex_first_preimage_follows_domain_order() {
        let tau = two_cluster_tau();
        let bit = Domain::new(vec![0, 1]);
        assert_eq!(
            tau.lex_first_preimage("X", 0, &[&bit, &bit]).unwrap(),
            vec![0, 0]
        );
        assert_eq!(
            tau.lex_first_preimage("X", 1, &[&bit, &bit]).unwrap(),
            vec![1, 1]
        );
    }

    #[test]
    fn coverage_gap_is_reported() {
        let inter = InterClustering::new(vec![Cluster {
            name: "X".into(),
            members: vec!["A".into()],
        }])
        .unwrap();
        let intra = IntraClustering::new(vec![ClusterBlocks {
            cluster: "X".into(),
            blocks: vec![IntraBlock { label: 0, values: vec![vec![0]] }],
        }])
        .unwrap();
        let tau = build_tau(&inter, &intra).unwrap();
        let vars = vec![Variable { name: "A".into(), domain: Domain::new(vec![0, 1]) }];
        assert!(matches!(
            tau.check_coverage(&vars),
            Err(AbstractionError::ClusterInvalid(_))
        ));
    }
}
