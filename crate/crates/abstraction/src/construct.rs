use std::collections::{BTreeMap, BTreeSet};

use graphs::InterClustering;
use itertools::Itertools;
use scm_core::{joint_assignments, Domain, MechanismSpec, Scm, Value};

use crate::aic::check_aic;
use crate::error::AbstractionError;
use crate::intra::IntraClustering;
use crate::tau::{build_tau, ConstructiveTau};

/// Endogenous closure of one cluster: the members plus every unclustered
/// variable reachable through parents without crossing into another cluster,
/// along with the crossed-into clusters themselves.
struct Closure {
    /// Closure variables, low declaration order.
    vars: Vec<String>,
    /// Parent clusters, cluster declaration order.
    parent_clusters: Vec<String>,
}

fn cluster_closure(
    scm: &Scm,
    inter: &InterClustering,
    cluster: &str,
) -> Result<Closure, AbstractionError> {
    let members: BTreeSet<&str> = inter
        .cluster(cluster)
        .ok_or_else(|| AbstractionError::UnknownCluster(cluster.to_string()))?
        .members
        .iter()
        .map(|s| s.as_str())
        .collect();
    let mut in_closure: BTreeSet<String> = members.iter().map(|s| s.to_string()).collect();
    let mut parents: BTreeSet<String> = BTreeSet::new();
    let mut stack: Vec<String> = in_closure.iter().cloned().collect();
    while let Some(v) = stack.pop() {
        for p in scm.mechanism(&v)?.endo_parents {
            match inter.cluster_of(&p) {
                Some(c) if c == cluster => {
                    // already a member, already on the initial stack
                }
                Some(c) => {
                    parents.insert(c.to_string());
                }
                None => {
                    if in_closure.insert(p.clone()) {
                        stack.push(p);
                    }
                }
            }
        }
    }
    let vars = scm
        .variables()
        .iter()
        .filter(|v| in_closure.contains(&v.name))
        .map(|v| v.name.clone())
        .collect();
    let parent_clusters = inter
        .clusters()
        .iter()
        .filter(|c| parents.contains(&c.name))
        .map(|c| c.name.clone())
        .collect();
    Ok(Closure { vars, parent_clusters })
}

/// Builds the abstract model induced by τ: one variable per cluster (its
/// domain the block labels), the low exogenous blocks carried over
/// unchanged, and one tabulated mechanism per cluster obtained by evaluating
/// the low model with the other clusters held at preimage representatives.
///
/// Fails with `AicViolation` when the invariance check fails — the table
/// rows would then depend on which representative was chosen.
pub fn construct_abstraction(
    scm: &Scm,
    inter: &InterClustering,
    intra: &IntraClustering,
) -> Result<(ConstructiveTau, Scm), AbstractionError> {
    let tau = build_tau(inter, intra)?;
    let report = check_aic(scm, &tau)?;
    if !report.holds {
        return Err(AbstractionError::AicViolation(report));
    }

    let clusters = tau.inter().clusters();
    let mut mechanisms = Vec::with_capacity(clusters.len());
    for cluster in clusters {
        let closure = cluster_closure(scm, tau.inter(), &cluster.name)?;
        let exo_blocks: Vec<String> = {
            let mut used: BTreeSet<String> = BTreeSet::new();
            for v in &closure.vars {
                used.extend(scm.mechanism(v)?.exo_parents);
            }
            scm.exogenous()
                .iter()
                .filter(|b| used.contains(&b.name))
                .map(|b| b.name.clone())
                .collect()
        };

        let parent_domains: Vec<&Domain> = closure
            .parent_clusters
            .iter()
            .map(|c| Ok(&tau.high_variable(c)?.domain))
            .collect::<Result<_, AbstractionError>>()?;
        let exo_domains: Vec<&Domain> = exo_blocks
            .iter()
            .map(|b| Ok(&scm.exogenous_block(b)?.domain))
            .collect::<Result<_, AbstractionError>>()?;
        let all_domains: Vec<&Domain> =
            parent_domains.iter().chain(&exo_domains).copied().collect();

        // Representatives for clusters outside this one: parents take the
        // lex-first preimage of the row's label, the rest sit at their
        // members' first domain values. The invariance check above makes the
        // row value independent of these choices.
        let mut table: BTreeMap<String, Value> = BTreeMap::new();
        for row in joint_assignments(&all_domains) {
            let (parent_labels, exo_values) = row.split_at(closure.parent_clusters.len());

            let mut u_full: BTreeMap<String, Value> = scm
                .exogenous()
                .iter()
                .map(|b| (b.name.clone(), b.domain.values()[0]))
                .collect();
            for (b, &v) in exo_blocks.iter().zip(exo_values) {
                u_full.insert(b.clone(), v);
            }

            let mut do_map: BTreeMap<String, Value> = BTreeMap::new();
            for other in clusters {
                if other.name == cluster.name {
                    continue;
                }
                let rep = match closure.parent_clusters.iter().position(|c| *c == other.name) {
                    Some(slot) => {
                        let domains: Vec<&Domain> = other
                            .members
                            .iter()
                            .map(|m| Ok(&scm.variable(m)?.domain))
                            .collect::<Result<_, AbstractionError>>()?;
                        tau.lex_first_preimage(&other.name, parent_labels[slot], &domains)?
                    }
                    None => other
                        .members
                        .iter()
                        .map(|m| Ok(scm.variable(m)?.domain.values()[0]))
                        .collect::<Result<_, AbstractionError>>()?,
                };
                do_map.extend(other.members.iter().cloned().zip(rep));
            }

            let out = scm.evaluate_unit(&u_full, &do_map)?;
            let tuple: Vec<Value> = cluster.members.iter().map(|m| out[m]).collect();
            let label = tau.cluster_value(&cluster.name, &tuple)?;
            let key = row.iter().map(|v| v.to_string()).join(",");
            table.insert(key, label);
        }

        let parent_refs: Vec<&str> =
            closure.parent_clusters.iter().map(|s| s.as_str()).collect();
        let exo_refs: Vec<&str> = exo_blocks.iter().map(|s| s.as_str()).collect();
        mechanisms.push(MechanismSpec::from_table(
            &cluster.name,
            &parent_refs,
            &exo_refs,
            table,
        ));
    }

    let high = Scm::new(
        tau.high_variables().to_vec(),
        scm.exogenous().to_vec(),
        mechanisms,
    )?;
    Ok((tau, high))
}
