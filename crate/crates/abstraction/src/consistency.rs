use itertools::Itertools;
use scm_core::{joint_assignments, CtfEvent, CtfQuery, Scm, ScmError, Value, DEFAULT_ENUM_BUDGET};

use crate::error::AbstractionError;
use crate::query_map::{
    cluster_split, expand_terms, lift_query, split_worlds, LoweredQuery, WorldPreimage,
};
use crate::tau::ConstructiveTau;

/// Comparison tolerance when both models are evaluated by exact enumeration.
pub const EXACT_TOL: f64 = 1e-9;
/// Default tolerance when either side comes from an optimized model.
pub const OPTIMIZED_TOL: f64 = 0.05;
/// Counterfactual conjunctions are enumerated up to this many worlds.
pub const DEFAULT_WORLD_BUDGET: usize = 2;

/// Preimage expansion of a low-level query's outcome events, keeping the
/// query's own interventions fixed. Interventions must still be
/// cluster-aligned for the query to have a lift at all.
fn preimage_worlds(
    tau: &ConstructiveTau,
    events: &[CtfEvent],
) -> Result<Vec<WorldPreimage>, AbstractionError> {
    let mut worlds = Vec::new();
    for (intv, outcomes) in split_worlds(events)? {
        cluster_split(tau, &intv, "intervention")?;
        let mut alternatives = Vec::new();
        for (c, tuple) in cluster_split(tau, &outcomes, "outcome")? {
            let label = tau.cluster_value(c, &tuple)?;
            let members = &tau
                .inter()
                .cluster(c)
                .expect("cluster_split returns known clusters")
                .members;
            alternatives.push(
                tau.preimage(c, label)?
                    .iter()
                    .map(|row| members.iter().cloned().zip(row.iter().copied()).collect())
                    .collect(),
            );
        }
        let mut intervention = intv.clone();
        intervention.sort();
        worlds.push(WorldPreimage { intervention, alternatives });
    }
    Ok(worlds)
}

/// Both sides of the consistency equation for one low-level query: the
/// low-level value summed over the τ-preimage of each outcome (interventions
/// fixed as given), and the lifted query's value on the high model.
pub fn q_tau_values(
    m_l: &Scm,
    m_h: &Scm,
    tau: &ConstructiveTau,
    q_low: &CtfQuery,
) -> Result<(f64, f64), AbstractionError> {
    let as_queries = |terms: Vec<Vec<CtfEvent>>| {
        terms
            .into_iter()
            .map(|events| CtfQuery { events, given: Vec::new() })
            .collect::<Vec<_>>()
    };
    let lowered = if q_low.given.is_empty() {
        LoweredQuery {
            numerator: as_queries(expand_terms(&preimage_worlds(tau, &q_low.events)?)),
            denominator: Vec::new(),
        }
    } else {
        let joint: Vec<CtfEvent> =
            q_low.events.iter().chain(&q_low.given).cloned().collect();
        LoweredQuery {
            numerator: as_queries(expand_terms(&preimage_worlds(tau, &joint)?)),
            denominator: as_queries(expand_terms(&preimage_worlds(tau, &q_low.given)?)),
        }
    };
    let low = lowered.value(m_l)?;
    let high = m_h.ctf_prob(&lift_query(tau, q_low)?)?;
    Ok((low, high))
}

pub fn check_q_tau_consistency(
    m_l: &Scm,
    m_h: &Scm,
    tau: &ConstructiveTau,
    q_low: &CtfQuery,
    tol: f64,
) -> Result<bool, AbstractionError> {
    let (low, high) = q_tau_values(m_l, m_h, tau, q_low)?;
    Ok((low - high).abs() <= tol)
}

/// Checks one high-level conjunction against every low-level realization:
/// the high value must equal the preimage sum for every choice of
/// intervention preimage (outcomes always sum over their whole preimage).
fn high_query_holds(
    m_l: &Scm,
    m_h: &Scm,
    tau: &ConstructiveTau,
    q_high: &CtfQuery,
    tol: f64,
) -> Result<bool, AbstractionError> {
    let high = m_h.ctf_prob(q_high)?;
    let worlds = split_worlds(&q_high.events)?;

    // Per world: every flattened low intervention realizing the high one.
    let mut intv_options: Vec<Vec<Vec<(String, Value)>>> = Vec::new();
    let mut outcome_alts: Vec<Vec<Vec<Vec<(String, Value)>>>> = Vec::new();
    for (intv, outcomes) in &worlds {
        let per_cluster: Vec<Vec<Vec<(String, Value)>>> = intv
            .iter()
            .map(|(c, label)| {
                let members = &tau
                    .inter()
                    .cluster(c)
                    .ok_or_else(|| AbstractionError::UnknownCluster(c.clone()))?
                    .members;
                Ok(tau
                    .preimage(c, *label)?
                    .iter()
                    .map(|row| {
                        members.iter().cloned().zip(row.iter().copied()).collect::<Vec<_>>()
                    })
                    .collect())
            })
            .collect::<Result<_, AbstractionError>>()?;
        let flattened: Vec<Vec<(String, Value)>> = if per_cluster.is_empty() {
            vec![Vec::new()]
        } else {
            per_cluster
                .iter()
                .map(|opts| opts.iter())
                .multi_cartesian_product()
                .map(|choice| {
                    let mut flat: Vec<(String, Value)> =
                        choice.into_iter().flatten().cloned().collect();
                    flat.sort();
                    flat
                })
                .collect()
        };
        intv_options.push(flattened);

        let mut alternatives = Vec::new();
        for (c, label) in outcomes {
            let members = &tau
                .inter()
                .cluster(c)
                .ok_or_else(|| AbstractionError::UnknownCluster(c.clone()))?
                .members;
            alternatives.push(
                tau.preimage(c, *label)?
                    .iter()
                    .map(|row| {
                        members.iter().cloned().zip(row.iter().copied()).collect::<Vec<_>>()
                    })
                    .collect::<Vec<_>>(),
            );
        }
        outcome_alts.push(alternatives);
    }

    for choice in intv_options.iter().map(|opts| opts.iter()).multi_cartesian_product() {
        let realized: Vec<WorldPreimage> = choice
            .into_iter()
            .zip(&outcome_alts)
            .map(|(intervention, alternatives)| WorldPreimage {
                intervention: intervention.clone(),
                alternatives: alternatives.clone(),
            })
            .collect();
        let mut low = 0.0;
        for events in expand_terms(&realized) {
            low += m_l.ctf_prob(&CtfQuery { events, given: Vec::new() })?;
        }
        if (low - high).abs() > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Every intervention on the high variables: the null world plus each
/// nonempty subset of clusters under each joint label assignment.
fn high_interventions(m_h: &Scm) -> Vec<Vec<(String, Value)>> {
    let vars = m_h.variables();
    let mut out = vec![Vec::new()];
    for mask in 1u64..(1 << vars.len()) {
        let chosen: Vec<&scm_core::Variable> =
            (0..vars.len()).filter(|i| mask & (1 << i) != 0).map(|i| &vars[i]).collect();
        for labels in joint_assignments(&chosen.iter().map(|v| &v.domain).collect::<Vec<_>>()) {
            out.push(
                chosen.iter().map(|v| v.name.clone()).zip(labels).collect(),
            );
        }
    }
    out
}

/// Nonempty outcome assignments over the clusters not intervened on in one
/// world.
fn outcome_options(m_h: &Scm, intervention: &[(String, Value)]) -> Vec<Vec<(String, Value)>> {
    let free: Vec<&scm_core::Variable> = m_h
        .variables()
        .iter()
        .filter(|v| !intervention.iter().any(|(c, _)| *c == v.name))
        .collect();
    let mut out = Vec::new();
    for mask in 1u64..(1 << free.len()) {
        let chosen: Vec<&&scm_core::Variable> =
            (0..free.len()).filter(|i| mask & (1 << i) != 0).map(|i| &free[i]).collect();
        for labels in joint_assignments(&chosen.iter().map(|v| &v.domain).collect::<Vec<_>>()) {
            out.push(
                chosen.iter().map(|v| v.name.clone()).zip(labels).collect(),
            );
        }
    }
    out
}

/// Exhaustively checks every cluster-aligned query of one layer: marginals
/// over any cluster subset (layer 1), the same under any single intervention
/// (layer 2), and conjunctions of counterfactual worlds up to the world
/// budget (layer 3). Low-level queries additionally range over every
/// intervention preimage.
pub fn check_layer_tau_consistency(
    m_l: &Scm,
    m_h: &Scm,
    tau: &ConstructiveTau,
    layer: u8,
) -> Result<bool, AbstractionError> {
    check_layer_tau_consistency_with_budget(m_l, m_h, tau, layer, DEFAULT_WORLD_BUDGET, EXACT_TOL)
}

pub fn check_layer_tau_consistency_with_budget(
    m_l: &Scm,
    m_h: &Scm,
    tau: &ConstructiveTau,
    layer: u8,
    worlds: usize,
    tol: f64,
) -> Result<bool, AbstractionError> {
    let interventions = high_interventions(m_h);
    let conjunctions: Vec<Vec<&Vec<(String, Value)>>> = match layer {
        1 => vec![vec![&interventions[0]]],
        2 => interventions.iter().map(|w| vec![w]).collect(),
        3 => (1..=worlds.max(1))
            .flat_map(|size| interventions.iter().combinations(size))
            .collect(),
        other => return Err(AbstractionError::InvalidLayer(other)),
    };

    for conjunction in conjunctions {
        let per_world_options: Vec<Vec<Vec<(String, Value)>>> = conjunction
            .iter()
            .map(|intv| outcome_options(m_h, intv))
            .collect();
        if per_world_options.iter().any(|o| o.is_empty()) {
            // A world intervening on every cluster leaves nothing to observe.
            continue;
        }
        for choice in per_world_options.iter().map(|o| o.iter()).multi_cartesian_product() {
            let events: Vec<CtfEvent> = conjunction
                .iter()
                .zip(choice)
                .flat_map(|(intv, outcomes)| {
                    outcomes.iter().map(|(c, label)| CtfEvent {
                        var: c.clone(),
                        intervention: (*intv).clone(),
                        value: *label,
                    })
                })
                .collect();
            let q_high = CtfQuery { events, given: Vec::new() };
            if !high_query_holds(m_l, m_h, tau, &q_high, tol)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// The exhaustive layer-3 path: two models agree on all of layer 3 exactly
/// when they agree on every functional counterfactual — the joint assignment
/// of each variable's response under every full parent configuration. Checks
/// each such conjunction the same way as the budgeted enumeration.
pub fn check_l3_tau_consistency_functional(
    m_l: &Scm,
    m_h: &Scm,
    tau: &ConstructiveTau,
    tol: f64,
) -> Result<bool, AbstractionError> {
    check_l3_tau_consistency_functional_with_budget(m_l, m_h, tau, tol, DEFAULT_ENUM_BUDGET)
}

pub fn check_l3_tau_consistency_functional_with_budget(
    m_l: &Scm,
    m_h: &Scm,
    tau: &ConstructiveTau,
    tol: f64,
    budget: u128,
) -> Result<bool, AbstractionError> {
    // coordinate = (variable, one full assignment to its high parents)
    let mut coords: Vec<(String, Vec<(String, Value)>, &scm_core::Domain)> = Vec::new();
    let mut rows: u128 = 1;
    for v in m_h.variables() {
        let mech = m_h.mechanism(&v.name)?;
        let parent_domains: Vec<&scm_core::Domain> = mech
            .endo_parents
            .iter()
            .map(|p| Ok(&m_h.variable(p)?.domain))
            .collect::<Result<_, AbstractionError>>()?;
        for pa in joint_assignments(&parent_domains) {
            coords.push((
                v.name.clone(),
                mech.endo_parents.iter().cloned().zip(pa).collect(),
                &v.domain,
            ));
            rows = rows.saturating_mul(v.domain.len() as u128);
        }
    }
    let needed = rows.saturating_mul(m_l.exo_assignment_count());
    if needed > budget {
        return Err(AbstractionError::Scm(ScmError::BudgetExceeded { needed, budget }));
    }

    for response in coords
        .iter()
        .map(|(_, _, domain)| domain.values().iter())
        .multi_cartesian_product()
    {
        let events: Vec<CtfEvent> = coords
            .iter()
            .zip(response)
            .map(|((var, pa, _), &value)| CtfEvent {
                var: var.clone(),
                intervention: pa.clone(),
                value,
            })
            .collect();
        let q_high = CtfQuery { events, given: Vec::new() };
        if !high_query_holds(m_l, m_h, tau, &q_high, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}
