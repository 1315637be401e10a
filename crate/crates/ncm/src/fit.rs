//! Gradient-descent fitting to interventional datasets, with an optional
//! query regularizer for min/max bounding.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scm_core::{CtfQuery, Pmf, Value};

use crate::error::{NcmError, Result};
use crate::model::{FitMode, Gradients, Ncm, TrainConfig};

/// Pressure on a counterfactual query during fitting. Positive `sign`
/// maximizes the query value, negative minimizes it; the strength follows
/// the λ schedule (`lambda` overrides the config's start→end pair).
pub struct QueryReg {
    pub query: CtfQuery,
    pub sign: f64,
    pub lambda: Option<(f64, f64)>,
}

#[derive(Clone, Debug)]
pub struct FitReport {
    /// Final cross-entropy Σ_datasets −Σ_v data(v)·ln model(v), computed
    /// exactly after the last step.
    pub data_loss: f64,
    /// Final query value, when a regularizer was given.
    pub query_value: Option<f64>,
    /// Σ_datasets entropy of the data itself — the cross-entropy floor.
    pub data_entropy: f64,
    pub iterations: usize,
}

// One dataset, preprocessed: enumeration index → data row, row masses.
struct Prepared {
    intervention: BTreeMap<String, Value>,
    // group id per enumeration index; usize::MAX for rows outside the data
    // projection (no such rows when the data covers the full joint).
    proj: Vec<usize>,
    masses: Vec<f64>,
}

fn prepare(ncm: &Ncm, intervention: &BTreeMap<String, Value>, data: &Pmf, budget: u128) -> Result<Prepared> {
    let node_names: Vec<&str> = ncm.nodes().iter().map(|n| n.name.as_str()).collect();
    let positions: Vec<usize> = data
        .vars()
        .iter()
        .map(|v| {
            node_names
                .iter()
                .position(|n| n == v)
                .ok_or_else(|| NcmError::InvalidQuery(format!("dataset variable {v} not in the model")))
        })
        .collect::<Result<_>>()?;

    let entries = ncm.induced_entries(intervention, budget)?;
    let mut group_of: BTreeMap<Vec<Value>, usize> = BTreeMap::new();
    let mut proj = Vec::with_capacity(entries.keys.len());
    let mut masses: Vec<f64> = Vec::new();
    for key in &entries.keys {
        let row: Vec<Value> = positions.iter().map(|&p| key[p]).collect();
        let g = *group_of.entry(row.clone()).or_insert_with(|| {
            masses.push(data.prob(&row));
            masses.len() - 1
        });
        proj.push(g);
    }
    Ok(Prepared {
        intervention: intervention.clone(),
        proj,
        masses,
    })
}

fn lambda_at(start: f64, end: f64, t: usize, total: usize) -> f64 {
    if start == 0.0 && end == 0.0 {
        return 0.0;
    }
    if total <= 1 {
        return start;
    }
    let frac = t as f64 / (total - 1) as f64;
    (start.ln() + (end / start).ln() * frac).exp()
}

/// Cross-entropy of the datasets against the model (and its gradient), as
/// used inside `fit`; exposed so callers can score a frozen model.
pub fn data_loss(ncm: &Ncm, datasets: &[(BTreeMap<String, Value>, Pmf)], budget: u128) -> Result<f64> {
    let mut loss = 0.0;
    for (intervention, data) in datasets {
        let prep = prepare(ncm, intervention, data, budget)?;
        let probs = ncm.induced_entries(intervention, budget)?.probs;
        let mut group_p = vec![0.0; prep.masses.len()];
        for (i, &g) in prep.proj.iter().enumerate() {
            group_p[g] += probs[i];
        }
        for (&m, &p) in prep.masses.iter().zip(&group_p) {
            if m > 0.0 {
                loss -= m * p.ln();
            }
        }
    }
    Ok(loss)
}

/// Fit the model to `(intervention, pmf)` datasets by gradient descent on
/// Σ crossentropy(data ‖ induced) − sign·λ_t·query, mutating the logits in
/// place. Deterministic given the config (the seed only matters in
/// stochastic mode).
pub fn fit(
    ncm: &mut Ncm,
    datasets: &[(BTreeMap<String, Value>, Pmf)],
    query_reg: Option<&QueryReg>,
    config: &TrainConfig,
) -> Result<FitReport> {
    if config.learning_rate <= 0.0 || !config.learning_rate.is_finite() {
        return Err(NcmError::InvalidConfig("learning_rate must be positive".into()));
    }
    let (lambda_start, lambda_end) = match query_reg {
        Some(reg) => reg.lambda.unwrap_or((config.lambda_start, config.lambda_end)),
        None => (0.0, 0.0),
    };
    if lambda_start < 0.0 || lambda_end < 0.0 {
        return Err(NcmError::InvalidConfig("λ must be ≥ 0".into()));
    }
    if (lambda_start == 0.0) != (lambda_end == 0.0) {
        return Err(NcmError::InvalidConfig(
            "λ schedule must be positive at both ends or zero at both".into(),
        ));
    }
    if let Some(reg) = query_reg {
        if !reg.sign.is_finite() {
            return Err(NcmError::InvalidConfig("query sign must be finite".into()));
        }
    }

    let budget = config.budget;
    let prepared: Vec<Prepared> = datasets
        .iter()
        .map(|(intervention, data)| prepare(ncm, intervention, data, budget))
        .collect::<Result<_>>()?;
    let data_entropy: f64 = datasets.iter().map(|(_, d)| d.entropy()).sum();

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    for t in 0..config.iterations {
        let mut grads = Gradients::zeros_like(ncm);
        let mut loss = 0.0;

        for prep in &prepared {
            let probs = ncm.induced_entries(&prep.intervention, budget)?.probs;
            let mut group_p = vec![0.0; prep.masses.len()];
            for (i, &g) in prep.proj.iter().enumerate() {
                group_p[g] += probs[i];
            }

            // Effective weight per group: data mass (exact) or sampled
            // frequency (stochastic), both targeting −Σ w_g·ln p_g.
            let weights: Vec<f64> = match &config.mode {
                FitMode::Exact => prep.masses.clone(),
                FitMode::Stochastic { batch_size } => {
                    let b = (*batch_size).max(1);
                    let mut counts = vec![0usize; prep.masses.len()];
                    let total_mass: f64 = prep.masses.iter().sum();
                    for _ in 0..b {
                        let mut u = rng.random::<f64>() * total_mass;
                        let mut pick = prep.masses.len() - 1;
                        for (g, &m) in prep.masses.iter().enumerate() {
                            if u < m {
                                pick = g;
                                break;
                            }
                            u -= m;
                        }
                        counts[pick] += 1;
                    }
                    counts.iter().map(|&c| c as f64 / b as f64).collect()
                }
            };

            for (&w, &p) in weights.iter().zip(&group_p) {
                if w > 0.0 {
                    loss -= w * p.ln();
                }
            }
            let mut upstream = vec![0.0; prep.proj.len()];
            for (i, &g) in prep.proj.iter().enumerate() {
                if weights[g] > 0.0 {
                    upstream[i] = -weights[g] / group_p[g];
                }
            }
            let g = ncm.induced_vjp(&prep.intervention, &upstream, budget)?;
            grads.scaled_add(1.0, &g);
        }

        if let Some(reg) = query_reg {
            let lambda = lambda_at(lambda_start, lambda_end, t, config.iterations);
            if lambda > 0.0 {
                let (value, qgrads) = ncm.ctf_with_grad(&reg.query, budget)?;
                loss -= reg.sign * lambda * value;
                grads.scaled_add(-reg.sign * lambda, &qgrads);
            }
        }

        if !loss.is_finite() {
            return Err(NcmError::Divergence { iteration: t, loss });
        }
        ncm.apply_step(&grads, -config.learning_rate);
        if !ncm.logits_finite() {
            return Err(NcmError::Divergence {
                iteration: t,
                loss: f64::NAN,
            });
        }
    }

    let final_data_loss = data_loss(ncm, datasets, budget)?;
    let query_value = match query_reg {
        Some(reg) => Some(ncm.ctf_pmf_with_budget(&reg.query, budget)?),
        None => None,
    };
    Ok(FitReport {
        data_loss: final_data_loss,
        query_value,
        data_entropy,
        iterations: config.iterations,
    })
}
