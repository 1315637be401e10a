//! Rejection sampling of counterfactual worlds from a frozen model.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scm_core::{CtfEvent, Value};

use crate::error::{NcmError, Result};
use crate::eval::EvalCtx;
use crate::model::Ncm;

#[derive(Clone, Debug)]
pub struct SampleOpts {
    /// Error out once the running acceptance rate drops below this after a
    /// warmup of attempts.
    pub acceptance_floor: f64,
    pub max_attempts: usize,
}

impl Default for SampleOpts {
    fn default() -> Self {
        SampleOpts {
            acceptance_floor: 1e-4,
            max_attempts: 1_000_000,
        }
    }
}

fn draw_categorical(probs: &[f64], u: f64) -> usize {
    let mut cum = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cum += p;
        if u < cum {
            return i;
        }
    }
    probs.len() - 1
}

impl Ncm {
    /// Draw `n` assignments of the world under `intervention`, conditioned
    /// on the counterfactual `context` events holding for the same unit:
    /// rejection over (û, r) with the realization uniforms shared across
    /// worlds. Deterministic given `seed`.
    pub fn sample(
        &self,
        context: &[CtfEvent],
        intervention: &BTreeMap<String, Value>,
        n: usize,
        seed: u64,
        opts: &SampleOpts,
    ) -> Result<Vec<BTreeMap<String, Value>>> {
        let ctx = EvalCtx::new(self)?;
        let topo = self.topo_order()?;
        let n_nodes = self.nodes().len();

        let target_fixed = fixed_indices(&ctx, intervention)?;
        // Context worlds keyed by normalized intervention; each carries its
        // (node, value) checks.
        let mut worlds: Vec<(Vec<Option<usize>>, Vec<(usize, usize)>)> = Vec::new();
        let mut world_keys: Vec<BTreeMap<String, Value>> = Vec::new();
        for event in context {
            let key: BTreeMap<String, Value> = event.intervention.iter().cloned().collect();
            let w = match world_keys.iter().position(|k| *k == key) {
                Some(w) => w,
                None => {
                    world_keys.push(key.clone());
                    worlds.push((fixed_indices(&ctx, &key)?, Vec::new()));
                    world_keys.len() - 1
                }
            };
            let v = ctx.node_of(&event.var)?;
            let idx = ctx.value_index(v, event.value)?;
            worlds[w].1.push((v, idx));
        }

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n);
        let mut attempts = 0usize;
        let mut unit = vec![0usize; self.cliques().len()];
        let mut r = vec![0.0f64; n_nodes];
        while out.len() < n && attempts < opts.max_attempts {
            attempts += 1;
            for (ci, probs) in ctx.clique_probs.iter().enumerate() {
                unit[ci] = draw_categorical(probs, rng.random::<f64>());
            }
            for rv in r.iter_mut() {
                *rv = rng.random::<f64>();
            }

            let ok = worlds.iter().all(|(fixed, checks)| {
                let vals = evaluate_world(&ctx, &topo, fixed, &unit, &r);
                checks.iter().all(|&(v, idx)| vals[v] == idx)
            });
            if !ok {
                // Cheap running-rate guard so impossible contexts fail fast.
                if attempts >= 10_000
                    && (out.len() as f64) < opts.acceptance_floor * attempts as f64
                {
                    return Err(NcmError::AcceptanceTooLow {
                        accepted: out.len(),
                        attempts,
                        floor: opts.acceptance_floor,
                    });
                }
                continue;
            }

            let vals = evaluate_world(&ctx, &topo, &target_fixed, &unit, &r);
            let mut assignment = BTreeMap::new();
            for (v, node) in self.nodes().iter().enumerate() {
                assignment.insert(node.name.clone(), node.domain.values()[vals[v]]);
            }
            out.push(assignment);
        }
        if out.len() < n {
            return Err(NcmError::AcceptanceTooLow {
                accepted: out.len(),
                attempts,
                floor: opts.acceptance_floor,
            });
        }
        Ok(out)
    }
}

fn fixed_indices(ctx: &EvalCtx, intervention: &BTreeMap<String, Value>) -> Result<Vec<Option<usize>>> {
    let mut fixed = vec![None; ctx.ncm.nodes().len()];
    for (name, &value) in intervention {
        let v = ctx.node_of(name)?;
        fixed[v] = Some(ctx.value_index(v, value)?);
    }
    Ok(fixed)
}

// Forward evaluation of one world given the unit and realization draws.
fn evaluate_world(
    ctx: &EvalCtx,
    topo: &[usize],
    fixed: &[Option<usize>],
    unit: &[usize],
    r: &[f64],
) -> Vec<usize> {
    let mut vals = vec![0usize; fixed.len()];
    for &v in topo {
        vals[v] = match fixed[v] {
            Some(idx) => idx,
            None => {
                let row = ctx.row(v, &vals, unit);
                let d = ctx.dom[v];
                let probs = &ctx.node_probs[v][row * d..(row + 1) * d];
                draw_categorical(probs, r[v])
            }
        };
    }
    vals
}
