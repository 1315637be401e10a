use std::collections::BTreeMap;

use graphs::check_admissible;
use itertools::Itertools;
use scm_core::{joint_assignments, Pmf, Scm, ScmError, Value, DEFAULT_ENUM_BUDGET};
use serde::{Deserialize, Serialize};

use crate::error::AbstractionError;
use crate::query_map::push_assignment;
use crate::tau::ConstructiveTau;

/// Comparison tolerance for the distribution-level invariance checks.
pub const DATA_AIC_TOL: f64 = 1e-9;

/// A concrete invariance violation. `v1`/`v2` are τ-equivalent assignments
/// whose downstream behavior differs: for the functional check, cluster
/// `cluster` maps to different labels under unit `u`; for the data checks,
/// the pushforward distributions differ at `high_value`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AicWitness {
    pub v1: BTreeMap<String, Value>,
    pub v2: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub u: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cluster: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub high_value: Option<BTreeMap<String, Value>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AicReport {
    pub holds: bool,
    /// First violation in enumeration order; present exactly when `holds`
    /// is false.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<AicWitness>,
}

impl AicReport {
    fn ok() -> Self {
        AicReport { holds: true, witness: None }
    }

    fn fail(witness: AicWitness) -> Self {
        AicReport { holds: false, witness: Some(witness) }
    }
}

/// Joint assignments over the clustered variables, one tuple per cluster,
/// clusters in declaration order. Returns per-assignment (flat variable map,
/// per-cluster label image).
fn covered_assignments(
    scm: &Scm,
    tau: &ConstructiveTau,
) -> Result<Vec<(BTreeMap<String, Value>, Vec<Value>)>, AbstractionError> {
    let mut per_cluster: Vec<Vec<(Vec<Value>, Value)>> = Vec::new();
    for cluster in tau.inter().clusters() {
        let mut domains = Vec::new();
        for m in &cluster.members {
            domains.push(&scm.variable(m)?.domain);
        }
        let tuples = joint_assignments(&domains);
        let mut labeled = Vec::new();
        for t in tuples {
            let label = tau.cluster_value(&cluster.name, &t)?;
            labeled.push((t, label));
        }
        per_cluster.push(labeled);
    }
    Ok(per_cluster
        .iter()
        .map(|c| c.iter())
        .multi_cartesian_product()
        .map(|choice| {
            let mut flat = BTreeMap::new();
            let mut image = Vec::new();
            for (cluster, (tuple, label)) in tau.inter().clusters().iter().zip(&choice) {
                flat.extend(cluster.members.iter().cloned().zip(tuple.iter().copied()));
                image.push(*label);
            }
            (flat, image)
        })
        .collect())
}

/// Functional abstract-invariance check: for every pair of τ-equivalent
/// assignments to the clustered variables and every exogenous unit, each
/// cluster's mechanisms must land in the same block under either
/// assignment. Parents in other clusters take the assignment's values;
/// parents inside the cluster and unclustered variables evaluate
/// recursively from the unit.
pub fn check_aic(scm: &Scm, tau: &ConstructiveTau) -> Result<AicReport, AbstractionError> {
    check_aic_with_budget(scm, tau, DEFAULT_ENUM_BUDGET)
}

pub fn check_aic_with_budget(
    scm: &Scm,
    tau: &ConstructiveTau,
    budget: u128,
) -> Result<AicReport, AbstractionError> {
    tau.check_coverage(scm.variables())?;
    if !check_admissible(&scm.induced_diagram(), tau.inter())? {
        return Err(AbstractionError::NotAdmissible(
            "clusters have no topological ordering".into(),
        ));
    }

    let assignments = covered_assignments(scm, tau)?;
    let exo_domains: Vec<_> = scm.exogenous().iter().map(|b| &b.domain).collect();
    let units = joint_assignments(&exo_domains);
    let k = tau.inter().len();

    let mut groups: BTreeMap<&[Value], Vec<usize>> = BTreeMap::new();
    for (i, (_, image)) in assignments.iter().enumerate() {
        groups.entry(image).or_default().push(i);
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for members in groups.values() {
        for (a, &i) in members.iter().enumerate() {
            for &j in &members[a + 1..] {
                pairs.push((i, j));
            }
        }
    }
    pairs.sort_unstable();

    let needed = (assignments.len() as u128 + pairs.len() as u128)
        * units.len() as u128
        * k as u128;
    if needed > budget {
        return Err(AbstractionError::Scm(ScmError::BudgetExceeded { needed, budget }));
    }

    // One mechanism image per (assignment, unit, cluster); pair checking is
    // then pure comparison, keeping first-witness order independent of the
    // grouping.
    let mut images: Vec<Vec<Vec<Value>>> = Vec::with_capacity(assignments.len());
    for (flat, _) in &assignments {
        let mut by_unit = Vec::with_capacity(units.len());
        for unit in &units {
            let u: BTreeMap<String, Value> = scm
                .exogenous()
                .iter()
                .map(|b| b.name.clone())
                .zip(unit.iter().copied())
                .collect();
            let mut per_cluster = Vec::with_capacity(k);
            for cluster in tau.inter().clusters() {
                let held: BTreeMap<String, Value> = flat
                    .iter()
                    .filter(|(var, _)| !cluster.members.contains(var))
                    .map(|(var, &val)| (var.clone(), val))
                    .collect();
                let out = scm.evaluate_unit(&u, &held)?;
                let tuple: Vec<Value> = cluster.members.iter().map(|m| out[m]).collect();
                per_cluster.push(tau.cluster_value(&cluster.name, &tuple)?);
            }
            by_unit.push(per_cluster);
        }
        images.push(by_unit);
    }

    for (i, j) in pairs {
        for (un, unit) in units.iter().enumerate() {
            for c in 0..k {
                if images[i][un][c] != images[j][un][c] {
                    let u: BTreeMap<String, Value> = scm
                        .exogenous()
                        .iter()
                        .map(|b| b.name.clone())
                        .zip(unit.iter().copied())
                        .collect();
                    return Ok(AicReport::fail(AicWitness {
                        v1: assignments[i].0.clone(),
                        v2: assignments[j].0.clone(),
                        u,
                        cluster: Some(c),
                        high_value: None,
                    }));
                }
            }
        }
    }
    Ok(AicReport::ok())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataAicMode {
    /// Pushforwards of P(V | x) must agree for τ-equivalent x.
    Conditional,
    /// Pushforwards of P(V[x]) must agree for τ-equivalent x.
    Interventional,
}

fn describe_intervention(x: &BTreeMap<String, Value>) -> String {
    if x.is_empty() {
        return "observational".into();
    }
    x.iter().map(|(v, val)| format!("{v}={val}")).join(",")
}

/// Pushes one pmf through τ, restricted to entries matching `condition`;
/// returns the normalized image distribution, or None when the condition has
/// zero mass.
fn pushforward(
    pmf: &Pmf,
    tau: &ConstructiveTau,
    condition: &BTreeMap<String, Value>,
) -> Result<Option<BTreeMap<Vec<Value>, f64>>, AbstractionError> {
    let vars = pmf.vars().to_vec();
    let index: BTreeMap<&str, usize> =
        vars.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
    for cluster in tau.inter().clusters() {
        for m in &cluster.members {
            if !index.contains_key(m.as_str()) {
                return Err(AbstractionError::MissingDistribution(format!(
                    "distribution over {:?} lacks clustered variable {m}",
                    vars
                )));
            }
        }
    }
    let order: Vec<&str> = tau.inter().clusters().iter().map(|c| c.name.as_str()).collect();
    let mut mass = 0.0;
    let mut image: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
    for (values, p) in pmf.iter() {
        if condition.iter().any(|(v, &val)| values[index[v.as_str()]] != val) {
            continue;
        }
        mass += p;
        let high = push_assignment(tau, &vars, values)?;
        let key: Vec<Value> = order.iter().map(|c| high[*c]).collect();
        *image.entry(key).or_insert(0.0) += p;
    }
    if mass == 0.0 {
        return Ok(None);
    }
    for v in image.values_mut() {
        *v /= mass;
    }
    Ok(Some(image))
}

fn image_mismatch(
    a: &BTreeMap<Vec<Value>, f64>,
    b: &BTreeMap<Vec<Value>, f64>,
    tau: &ConstructiveTau,
) -> Option<BTreeMap<String, Value>> {
    let keys: std::collections::BTreeSet<&Vec<Value>> = a.keys().chain(b.keys()).collect();
    for key in keys {
        let pa = a.get(key).copied().unwrap_or(0.0);
        let pb = b.get(key).copied().unwrap_or(0.0);
        if (pa - pb).abs() > DATA_AIC_TOL {
            return Some(
                tau.inter()
                    .clusters()
                    .iter()
                    .map(|c| c.name.clone())
                    .zip(key.iter().copied())
                    .collect(),
            );
        }
    }
    None
}

/// Distribution-level invariance check. For every union of clusters and
/// every τ-equivalent pair of assignments to it, the conditional (or
/// interventional) distribution pushed through τ must not depend on which
/// representative was used.
///
/// `dists` is keyed by intervention; the empty key is the observational
/// distribution. Conditional mode needs only that; interventional mode needs
/// an entry per required intervention. Conditioning events with zero mass
/// are skipped (no conditional distribution exists to compare).
pub fn check_data_aic(
    dists: &BTreeMap<BTreeMap<String, Value>, Pmf>,
    tau: &ConstructiveTau,
    mode: DataAicMode,
) -> Result<AicReport, AbstractionError> {
    let k = tau.inter().len();
    // Per cluster: (member names, labeled rows).
    let mut cluster_rows: Vec<(Vec<String>, Vec<(Value, Vec<Value>)>)> = Vec::new();
    for cluster in tau.inter().clusters() {
        let blocks = tau
            .intra()
            .blocks_for(&cluster.name)
            .expect("build_tau pairs every cluster with blocks");
        let rows = blocks
            .iter()
            .flat_map(|b| b.values.iter().map(|r| (b.label, r.clone())))
            .collect();
        cluster_rows.push((cluster.members.clone(), rows));
    }

    for mask in 1u64..(1 << k) {
        let chosen: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
        let labeled: Vec<(BTreeMap<String, Value>, Vec<Value>)> = chosen
            .iter()
            .map(|&i| cluster_rows[i].1.iter())
            .multi_cartesian_product()
            .map(|choice| {
                let mut flat = BTreeMap::new();
                let mut image = Vec::new();
                for (&i, (label, row)) in chosen.iter().zip(choice) {
                    flat.extend(cluster_rows[i].0.iter().cloned().zip(row.iter().copied()));
                    image.push(*label);
                }
                (flat, image)
            })
            .collect();

        let mut groups: BTreeMap<&[Value], Vec<usize>> = BTreeMap::new();
        for (i, (_, image)) in labeled.iter().enumerate() {
            groups.entry(image).or_default().push(i);
        }
        let mut pairs: Vec<(usize, usize)> = Vec::new();
        for members in groups.values() {
            for (a, &i) in members.iter().enumerate() {
                for &j in &members[a + 1..] {
                    pairs.push((i, j));
                }
            }
        }
        pairs.sort_unstable();

        for (i, j) in pairs {
            let (x1, x2) = (&labeled[i].0, &labeled[j].0);
            let (img1, img2) = match mode {
                DataAicMode::Conditional => {
                    let obs = dists.get(&BTreeMap::new()).ok_or_else(|| {
                        AbstractionError::MissingDistribution("observational".into())
                    })?;
                    (pushforward(obs, tau, x1)?, pushforward(obs, tau, x2)?)
                }
                DataAicMode::Interventional => {
                    let lookup = |x: &BTreeMap<String, Value>| {
                        dists.get(x).ok_or_else(|| {
                            AbstractionError::MissingDistribution(format!(
                                "P(V[{}])",
                                describe_intervention(x)
                            ))
                        })
                    };
                    (
                        pushforward(lookup(x1)?, tau, &BTreeMap::new())?,
                        pushforward(lookup(x2)?, tau, &BTreeMap::new())?,
                    )
                }
            };
            let (Some(img1), Some(img2)) = (img1, img2) else {
                continue;
            };
            if let Some(high_value) = image_mismatch(&img1, &img2, tau) {
                return Ok(AicReport::fail(AicWitness {
                    v1: x1.clone(),
                    v2: x2.clone(),
                    u: BTreeMap::new(),
                    cluster: None,
                    high_value: Some(high_value),
                }));
            }
        }
    }
    Ok(AicReport::ok())
}
