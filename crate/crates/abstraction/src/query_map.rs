use std::collections::BTreeMap;

use itertools::Itertools;
use scm_core::{CtfEvent, CtfQuery, Scm, ScmError, Value, Variable};

use crate::error::AbstractionError;
use crate::tau::{apply_tau, ConstructiveTau};

/// Events grouped by their intervention, in first-appearance order. Each
/// group keeps its outcome assignments in event order.
pub(crate) fn split_worlds(
    events: &[CtfEvent],
) -> Result<Vec<(Vec<(String, Value)>, Vec<(String, Value)>)>, AbstractionError> {
    let mut worlds: Vec<(Vec<(String, Value)>, Vec<(String, Value)>)> = Vec::new();
    for e in events {
        let slot = worlds.iter_mut().find(|(i, _)| *i == e.intervention);
        let outcomes = match slot {
            Some((_, outcomes)) => outcomes,
            None => {
                worlds.push((e.intervention.clone(), Vec::new()));
                &mut worlds.last_mut().unwrap().1
            }
        };
        if outcomes.iter().any(|(v, _)| *v == e.var) {
            return Err(AbstractionError::MisalignedQuery(format!(
                "{} appears twice in one world",
                e.var
            )));
        }
        outcomes.push((e.var.clone(), e.value));
    }
    Ok(worlds)
}

/// Splits an assignment into per-cluster tuples, requiring an exact union of
/// clusters. Returns (cluster name, tuple) pairs in cluster order.
pub(crate) fn cluster_split<'a>(
    tau: &'a ConstructiveTau,
    assignment: &[(String, Value)],
    role: &str,
) -> Result<Vec<(&'a str, Vec<Value>)>, AbstractionError> {
    let map: BTreeMap<&str, Value> = assignment.iter().map(|(v, x)| (v.as_str(), *x)).collect();
    let mut used = 0usize;
    let mut parts = Vec::new();
    for cluster in tau.inter().clusters() {
        let present = cluster.members.iter().filter(|m| map.contains_key(m.as_str())).count();
        if present == 0 {
            continue;
        }
        if present != cluster.members.len() {
            return Err(AbstractionError::MisalignedQuery(format!(
                "{role} covers only part of cluster {}",
                cluster.name
            )));
        }
        let tuple: Vec<Value> = cluster.members.iter().map(|m| map[m.as_str()]).collect();
        used += present;
        parts.push((cluster.name.as_str(), tuple));
    }
    if used != map.len() {
        let stray = map
            .keys()
            .find(|v| tau.inter().cluster_of(v).is_none())
            .expect("a non-cluster variable accounts for the shortfall");
        return Err(AbstractionError::MisalignedQuery(format!(
            "{role} uses {stray}, which is in no cluster"
        )));
    }
    Ok(parts)
}

/// Maps a low-level query through τ term by term. Every world's outcome set
/// and intervention set must be an exact union of clusters.
///
/// Conditioning terms are mapped the same way, independently of the outcome
/// terms.
pub fn lift_query(tau: &ConstructiveTau, q: &CtfQuery) -> Result<CtfQuery, AbstractionError> {
    let lift_events = |events: &[CtfEvent], role: &str| -> Result<Vec<CtfEvent>, AbstractionError> {
        let mut lifted = Vec::new();
        for (intervention, outcomes) in split_worlds(events)? {
            let high_intv: Vec<(String, Value)> = cluster_split(tau, &intervention, role)?
                .into_iter()
                .map(|(c, tuple)| Ok((c.to_string(), tau.cluster_value(c, &tuple)?)))
                .collect::<Result<_, AbstractionError>>()?;
            for (c, tuple) in cluster_split(tau, &outcomes, role)? {
                lifted.push(CtfEvent {
                    var: c.to_string(),
                    intervention: high_intv.clone(),
                    value: tau.cluster_value(c, &tuple)?,
                });
            }
        }
        Ok(lifted)
    };
    Ok(CtfQuery {
        events: lift_events(&q.events, "outcome")?,
        given: lift_events(&q.given, "conditioning term")?,
    })
}

/// A high-level query pushed back down: the sum of the numerator terms
/// (divided by the sum of the denominator terms when conditioning is
/// present) equals the high-level query's value on any consistent pair of
/// models.
#[derive(Clone, Debug)]
pub struct LoweredQuery {
    pub numerator: Vec<CtfQuery>,
    /// Conditioning preimages; empty when the query is unconditional.
    pub denominator: Vec<CtfQuery>,
}

impl LoweredQuery {
    pub fn value(&self, scm: &Scm) -> Result<f64, AbstractionError> {
        let mut num = 0.0;
        for t in &self.numerator {
            num += scm.ctf_prob(t)?;
        }
        if self.denominator.is_empty() {
            return Ok(num);
        }
        let mut den = 0.0;
        for t in &self.denominator {
            den += scm.ctf_prob(t)?;
        }
        if den == 0.0 {
            return Err(AbstractionError::Scm(ScmError::ZeroProbabilityConditioning(
                self.denominator.iter().map(CtfQuery::print).join(" + "),
            )));
        }
        Ok(num / den)
    }
}

/// Per-world preimage alternatives: a fixed low-level intervention plus, for
/// each outcome cluster, the candidate member assignments.
pub(crate) struct WorldPreimage {
    pub intervention: Vec<(String, Value)>,
    pub alternatives: Vec<Vec<Vec<(String, Value)>>>,
}

/// All event lists reachable by picking one alternative per cluster per
/// world.
pub(crate) fn expand_terms(worlds: &[WorldPreimage]) -> Vec<Vec<CtfEvent>> {
    let mut slots: Vec<&Vec<Vec<(String, Value)>>> = Vec::new();
    let mut owners: Vec<usize> = Vec::new();
    for (w, world) in worlds.iter().enumerate() {
        for alt in &world.alternatives {
            slots.push(alt);
            owners.push(w);
        }
    }
    if slots.is_empty() {
        return vec![Vec::new()];
    }
    slots
        .iter()
        .map(|alt| alt.iter())
        .multi_cartesian_product()
        .map(|choice| {
            let mut events = Vec::new();
            for (slot, members) in choice.iter().enumerate() {
                for (var, value) in members.iter() {
                    events.push(CtfEvent {
                        var: var.clone(),
                        intervention: worlds[owners[slot]].intervention.clone(),
                        value: *value,
                    });
                }
            }
            events
        })
        .collect()
}

fn member_domains<'a>(
    tau: &ConstructiveTau,
    cluster: &str,
    low_vars: &'a [Variable],
) -> Result<Vec<&'a scm_core::Domain>, AbstractionError> {
    tau.inter()
        .cluster(cluster)
        .ok_or_else(|| AbstractionError::UnknownCluster(cluster.to_string()))?
        .members
        .iter()
        .map(|m| {
            low_vars
                .iter()
                .find(|v| v.name == *m)
                .map(|v| &v.domain)
                .ok_or_else(|| AbstractionError::UnknownVariable(m.clone()))
        })
        .collect()
}

/// Lowers one world of a high-level query: the intervention takes the first
/// preimage in member-domain order, and each outcome cluster expands to all
/// of its preimage rows.
pub(crate) fn lower_world(
    tau: &ConstructiveTau,
    intervention: &[(String, Value)],
    outcomes: &[(String, Value)],
    low_vars: &[Variable],
) -> Result<WorldPreimage, AbstractionError> {
    let mut low_intv: Vec<(String, Value)> = Vec::new();
    for (c, label) in intervention {
        let cluster = tau
            .inter()
            .cluster(c)
            .ok_or_else(|| AbstractionError::UnknownCluster(c.clone()))?;
        let domains = member_domains(tau, c, low_vars)?;
        let tuple = tau.lex_first_preimage(c, *label, &domains)?;
        low_intv.extend(cluster.members.iter().cloned().zip(tuple));
    }
    low_intv.sort();

    let mut alternatives = Vec::new();
    for (c, label) in outcomes {
        let members = &tau
            .inter()
            .cluster(c)
            .ok_or_else(|| AbstractionError::UnknownCluster(c.clone()))?
            .members;
        let rows = tau.preimage(c, *label)?;
        alternatives.push(
            rows.iter()
                .map(|row| members.iter().cloned().zip(row.iter().copied()).collect())
                .collect(),
        );
    }
    Ok(WorldPreimage { intervention: low_intv, alternatives })
}

/// Expands a high-level query into the low-level summation that computes it.
///
/// Outcome terms range over every preimage row; interventions are fixed to
/// the first preimage in member-domain order (any representative gives the
/// same value on models satisfying the invariance condition). Conditioning
/// lowers to a ratio: joint preimages over conditioning preimages.
pub fn lower_query(
    tau: &ConstructiveTau,
    q_high: &CtfQuery,
    low_vars: &[Variable],
) -> Result<LoweredQuery, AbstractionError> {
    let expand = |events: &[CtfEvent]| -> Result<Vec<Vec<CtfEvent>>, AbstractionError> {
        let worlds = split_worlds(events)?
            .iter()
            .map(|(i, o)| lower_world(tau, i, o, low_vars))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(expand_terms(&worlds))
    };

    let event_terms = expand(&q_high.events)?;
    if q_high.given.is_empty() {
        return Ok(LoweredQuery {
            numerator: event_terms
                .into_iter()
                .map(|events| CtfQuery { events, given: Vec::new() })
                .collect(),
            denominator: Vec::new(),
        });
    }

    let given_terms = expand(&q_high.given)?;
    let mut numerator = Vec::new();
    for e in &event_terms {
        for g in &given_terms {
            let mut events = e.clone();
            events.extend(g.iter().cloned());
            numerator.push(CtfQuery { events, given: Vec::new() });
        }
    }
    Ok(LoweredQuery {
        numerator,
        denominator: given_terms
            .into_iter()
            .map(|events| CtfQuery { events, given: Vec::new() })
            .collect(),
    })
}

/// Maps a full low-level assignment through τ; thin convenience over
/// [`apply_tau`] for pmf pushforwards.
pub fn push_assignment(
    tau: &ConstructiveTau,
    vars: &[String],
    values: &[Value],
) -> Result<BTreeMap<String, Value>, AbstractionError> {
    let v: BTreeMap<String, Value> = vars.iter().cloned().zip(values.iter().copied()).collect();
    apply_tau(tau, &v)
}
