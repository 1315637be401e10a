//! Exact evaluation: unit-level solutions, counterfactual probabilities,
//! interventional distributions, and the functional (response-type) joint.
//!
//! Every probability here is an exhaustive sum over joint exogenous
//! assignments. Enumeration cost is guarded by an explicit budget measured
//! in unit evaluations; exceeding it is a hard error rather than a silent
//! stall.

use std::collections::BTreeMap;

use crate::domain::{MixedRadix, Value};
use crate::error::ScmError;
use crate::pmf::Pmf;
use crate::query::{CtfEvent, CtfQuery};
use crate::scm::Scm;

/// Default enumeration budget: unit evaluations per query.
pub const DEFAULT_ENUM_BUDGET: u128 = 10_000_000;

/// One world per distinct intervention: the mutilation mask plus the value
/// checks that worlds' events impose.
struct World {
    mask: Vec<Option<usize>>,
    event_checks: Vec<(usize, usize)>,
    given_checks: Vec<(usize, usize)>,
}

impl Scm {
    /// Deterministic solution for one exogenous assignment under an
    /// intervention. `u` must assign every block; intervened variables are
    /// cut from their mechanisms and fixed.
    pub fn evaluate_unit(
        &self,
        u: &BTreeMap<String, Value>,
        intervention: &BTreeMap<String, Value>,
    ) -> Result<BTreeMap<String, Value>, ScmError> {
        let u_idx = self.exo_indices(u)?;
        let mask = self.intervention_mask(intervention)?;
        let solution = self.solve(&u_idx, &mask);
        Ok(solution
            .iter()
            .enumerate()
            .map(|(v, &i)| (self.vars[v].name.clone(), self.vars[v].domain.values()[i]))
            .collect())
    }

    /// Probability of a counterfactual query under the default budget.
    pub fn ctf_prob(&self, query: &CtfQuery) -> Result<f64, ScmError> {
        self.ctf_prob_with_budget(query, DEFAULT_ENUM_BUDGET)
    }

    /// Probability of a conjunction of cross-world events, optionally
    /// conditioned: the mass of exogenous assignments on which every event
    /// holds in its own intervened world, normalized by the conditioning
    /// mass when present. Conditioning on a zero-probability event is an
    /// error.
    pub fn ctf_prob_with_budget(&self, query: &CtfQuery, budget: u128) -> Result<f64, ScmError> {
        let term_count = (query.events.len() + query.given.len()) as u128;
        if term_count == 0 {
            return Ok(1.0);
        }
        self.check_budget(self.exo_assignment_count() * term_count, budget)?;
        let worlds = self.worlds(query)?;

        let mut num = 0.0;
        let mut den = 0.0;
        let sizes: Vec<usize> = self.exo.iter().map(|b| b.domain.len()).collect();
        for u_idx in MixedRadix::new(sizes) {
            let p: f64 = u_idx.iter().zip(&self.exo).map(|(&i, b)| b.pmf[i]).product();
            if p == 0.0 {
                continue;
            }
            let mut all_events = true;
            let mut all_given = true;
            for world in &worlds {
                if !all_events && !all_given {
                    break;
                }
                let solution = self.solve(&u_idx, &world.mask);
                all_events &= world.event_checks.iter().all(|&(v, i)| solution[v] == i);
                all_given &= world.given_checks.iter().all(|&(v, i)| solution[v] == i);
            }
            if all_given {
                den += p;
                if all_events {
                    num += p;
                }
            }
        }

        if query.given.is_empty() {
            return Ok(num);
        }
        if den == 0.0 {
            let printed = query
                .given
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            return Err(ScmError::ZeroProbabilityConditioning(printed));
        }
        Ok(num / den)
    }

    /// Joint distribution of `over` under one intervention (default budget).
    pub fn layer_pmf(
        &self,
        over: &[String],
        intervention: &BTreeMap<String, Value>,
    ) -> Result<Pmf, ScmError> {
        self.layer_pmf_with_budget(over, intervention, DEFAULT_ENUM_BUDGET)
    }

    pub fn layer_pmf_with_budget(
        &self,
        over: &[String],
        intervention: &BTreeMap<String, Value>,
        budget: u128,
    ) -> Result<Pmf, ScmError> {
        let keep: Vec<usize> = over
            .iter()
            .map(|name| self.var_id(name))
            .collect::<Result<_, _>>()?;
        let mask = self.intervention_mask(intervention)?;
        self.check_budget(self.exo_assignment_count(), budget)?;

        let mut entries: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        let sizes: Vec<usize> = self.exo.iter().map(|b| b.domain.len()).collect();
        for u_idx in MixedRadix::new(sizes) {
            let p: f64 = u_idx.iter().zip(&self.exo).map(|(&i, b)| b.pmf[i]).product();
            if p == 0.0 {
                continue;
            }
            let solution = self.solve(&u_idx, &mask);
            let key: Vec<Value> = keep
                .iter()
                .map(|&v| self.vars[v].domain.values()[solution[v]])
                .collect();
            *entries.entry(key).or_insert(0.0) += p;
        }
        Pmf::new(over.to_vec(), entries)
    }

    /// Joint distribution of every variable's response to every assignment
    /// of its endogenous parents (default budget).
    ///
    /// Coordinates are named `V[P=a,Q=b]` (parents in declaration order), or
    /// plain `V` for a variable with no endogenous parents. Two models agree
    /// on this distribution exactly when they agree on every counterfactual.
    pub fn functional_ctf_pmf(&self) -> Result<Pmf, ScmError> {
        self.functional_ctf_pmf_with_budget(DEFAULT_ENUM_BUDGET)
    }

    pub fn functional_ctf_pmf_with_budget(&self, budget: u128) -> Result<Pmf, ScmError> {
        // coordinate = (variable, fixed endo-parent value indices)
        let mut coords: Vec<(usize, Vec<usize>)> = Vec::new();
        let mut names: Vec<String> = Vec::new();
        for v in 0..self.vars.len() {
            let mech = &self.mechs[v];
            let parent_sizes: Vec<usize> = mech
                .endo_parents
                .iter()
                .map(|&p| self.vars[p].domain.len())
                .collect();
            for pa_idx in MixedRadix::new(parent_sizes) {
                if pa_idx.is_empty() {
                    names.push(self.vars[v].name.clone());
                } else {
                    let inside = pa_idx
                        .iter()
                        .zip(&mech.endo_parents)
                        .map(|(&i, &p)| {
                            format!("{}={}", self.vars[p].name, self.vars[p].domain.values()[i])
                        })
                        .collect::<Vec<_>>()
                        .join(",");
                    names.push(format!("{}[{}]", self.vars[v].name, inside));
                }
                coords.push((v, pa_idx));
            }
        }
        self.check_budget(self.exo_assignment_count() * coords.len() as u128, budget)?;

        let mut entries: BTreeMap<Vec<Value>, f64> = BTreeMap::new();
        let sizes: Vec<usize> = self.exo.iter().map(|b| b.domain.len()).collect();
        for u_idx in MixedRadix::new(sizes) {
            let p: f64 = u_idx.iter().zip(&self.exo).map(|(&i, b)| b.pmf[i]).product();
            if p == 0.0 {
                continue;
            }
            // A response coordinate depends only on the mechanism's own
            // inputs, so it reads directly off the table.
            let key: Vec<Value> = coords
                .iter()
                .map(|&(v, ref pa_idx)| {
                    let mech = &self.mechs[v];
                    let mut row = 0usize;
                    for (slot, &i) in pa_idx.iter().enumerate() {
                        row = row * self.vars[mech.endo_parents[slot]].domain.len() + i;
                    }
                    for &b in &mech.exo_parents {
                        row = row * self.exo[b].domain.len() + u_idx[b];
                    }
                    self.vars[v].domain.values()[mech.table[row]]
                })
                .collect();
            *entries.entry(key).or_insert(0.0) += p;
        }
        Pmf::new(names, entries)
    }

    fn check_budget(&self, needed: u128, budget: u128) -> Result<(), ScmError> {
        if needed > budget {
            return Err(ScmError::BudgetExceeded { needed, budget });
        }
        Ok(())
    }

    fn exo_indices(&self, u: &BTreeMap<String, Value>) -> Result<Vec<usize>, ScmError> {
        for name in u.keys() {
            if !self.exo_index.contains_key(name) {
                return Err(ScmError::UnknownExogenous(name.clone()));
            }
        }
        self.exo
            .iter()
            .map(|b| {
                let &value = u
                    .get(&b.name)
                    .ok_or_else(|| ScmError::MissingExogenousValue(b.name.clone()))?;
                b.domain
                    .index_of(value)
                    .ok_or_else(|| ScmError::ValueOutsideDomain {
                        variable: b.name.clone(),
                        value,
                    })
            })
            .collect()
    }

    pub(crate) fn intervention_mask(
        &self,
        intervention: &BTreeMap<String, Value>,
    ) -> Result<Vec<Option<usize>>, ScmError> {
        let mut mask = vec![None; self.vars.len()];
        for (name, &value) in intervention {
            let v = self.var_id(name)?;
            mask[v] = Some(self.value_index(v, value)?);
        }
        Ok(mask)
    }

    /// Value indices for all variables, topological order walk.
    pub(crate) fn solve(&self, u_idx: &[usize], mask: &[Option<usize>]) -> Vec<usize> {
        let mut out = vec![0usize; self.vars.len()];
        for &v in &self.topo {
            if let Some(fixed) = mask[v] {
                out[v] = fixed;
                continue;
            }
            let mech = &self.mechs[v];
            let mut row = 0usize;
            for &p in &mech.endo_parents {
                row = row * self.vars[p].domain.len() + out[p];
            }
            for &b in &mech.exo_parents {
                row = row * self.exo[b].domain.len() + u_idx[b];
            }
            out[v] = mech.table[row];
        }
        out
    }

    fn worlds(&self, query: &CtfQuery) -> Result<Vec<World>, ScmError> {
        let mut worlds: Vec<(Vec<(String, Value)>, World)> = Vec::new();
        let mut add = |event: &CtfEvent, is_given: bool| -> Result<(), ScmError> {
            let v = self.var_id(&event.var)?;
            let check = (v, self.value_index(v, event.value)?);
            let slot = match worlds
                .iter()
                .position(|(itv, _)| *itv == event.intervention)
            {
                Some(i) => i,
                None => {
                    let mut intervention = BTreeMap::new();
                    for (name, value) in &event.intervention {
                        intervention.insert(name.clone(), *value);
                    }
                    worlds.push((
                        event.intervention.clone(),
                        World {
                            mask: self.intervention_mask(&intervention)?,
                            event_checks: Vec::new(),
                            given_checks: Vec::new(),
                        },
                    ));
                    worlds.len() - 1
                }
            };
            if is_given {
                worlds[slot].1.given_checks.push(check);
            } else {
                worlds[slot].1.event_checks.push(check);
            }
            Ok(())
        };
        for event in &query.events {
            add(event, false)?;
        }
        for event in &query.given {
            add(event, true)?;
        }
        Ok(worlds.into_iter().map(|(_, w)| w).collect())
    }
}
