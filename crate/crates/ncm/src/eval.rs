//! Exact evaluation: induced distributions and multi-world counterfactual
//! probabilities, both with analytic partials w.r.t. every logit.

use std::collections::BTreeMap;

use scm_core::{CtfEvent, CtfQuery, Pmf, Value};

use crate::error::{NcmError, Result};
use crate::model::{decode_radix, Gradients, Ncm};

/// Joint probabilities in a stable enumeration order (intervened nodes
/// pinned, free nodes in row-major node order, last node fastest). `keys`
/// are full assignments over `vars`.
pub struct InducedEntries {
    pub vars: Vec<String>,
    pub keys: Vec<Vec<Value>>,
    pub probs: Vec<f64>,
}

// Precomputed softmax tables and shape metadata for one evaluation pass.
pub(crate) struct EvalCtx<'a> {
    pub ncm: &'a Ncm,
    pub clique_probs: Vec<Vec<f64>>,
    pub node_probs: Vec<Vec<f64>>,
    pub parent_idx: Vec<Vec<usize>>,
    pub clique_sizes: Vec<Vec<usize>>,
    pub cl_rows: Vec<usize>,
    pub dom: Vec<usize>,
}

impl<'a> EvalCtx<'a> {
    pub fn new(ncm: &'a Ncm) -> Result<Self> {
        let index = ncm.node_index();
        let mut clique_probs = Vec::with_capacity(ncm.cliques().len());
        for c in ncm.cliques() {
            clique_probs.push(softmax(&c.logits));
        }
        let mut node_probs = Vec::with_capacity(ncm.nodes().len());
        let mut parent_idx = Vec::new();
        let mut clique_sizes = Vec::new();
        let mut cl_rows = Vec::new();
        let mut dom = Vec::new();
        for node in ncm.nodes() {
            let d = node.domain.values().len();
            let mut probs = vec![0.0; node.logits.len()];
            for (row, chunk) in node.logits.chunks(d).enumerate() {
                probs[row * d..(row + 1) * d].copy_from_slice(&softmax(chunk));
            }
            node_probs.push(probs);
            parent_idx.push(node.parents.iter().map(|p| index[p.as_str()]).collect());
            let sizes: Vec<usize> = node
                .cliques
                .iter()
                .map(|&ci| ncm.cliques()[ci].states())
                .collect();
            cl_rows.push(sizes.iter().product());
            clique_sizes.push(sizes);
            dom.push(d);
        }
        Ok(EvalCtx {
            ncm,
            clique_probs,
            node_probs,
            parent_idx,
            clique_sizes,
            cl_rows,
            dom,
        })
    }

    pub fn unit_count(&self) -> u128 {
        self.clique_probs
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128))
    }

    pub fn unit_weight(&self, unit: &[usize]) -> f64 {
        self.clique_probs
            .iter()
            .zip(unit)
            .map(|(p, &k)| p[k])
            .product()
    }

    /// Row of `v`'s table given every node's current value index and the
    /// unit (one state index per clique).
    pub fn row(&self, v: usize, vals: &[usize], unit: &[usize]) -> usize {
        let node = &self.ncm.nodes()[v];
        let mut pa = 0;
        for &pi in &self.parent_idx[v] {
            pa = pa * self.dom[pi] + vals[pi];
        }
        let mut cl = 0;
        for (&ci, &s) in node.cliques.iter().zip(&self.clique_sizes[v]) {
            cl = cl * s + unit[ci];
        }
        pa * self.cl_rows[v] + cl
    }

    pub fn prob(&self, v: usize, row: usize, val_idx: usize) -> f64 {
        self.node_probs[v][row * self.dom[v] + val_idx]
    }

    fn clique_state_counts(&self) -> Vec<usize> {
        self.clique_probs.iter().map(|p| p.len()).collect()
    }

    pub fn value_index(&self, v: usize, value: Value) -> Result<usize> {
        self.ncm.nodes()[v]
            .domain
            .values()
            .iter()
            .position(|&x| x == value)
            .ok_or_else(|| {
                NcmError::InvalidQuery(format!(
                    "value {value} outside the domain of {}",
                    self.ncm.nodes()[v].name
                ))
            })
    }

    pub fn node_of(&self, name: &str) -> Result<usize> {
        self.ncm
            .nodes()
            .iter()
            .position(|n| n.name == name)
            .ok_or_else(|| NcmError::InvalidQuery(format!("unknown variable {name}")))
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|&l| (l - max).exp()).collect();
    let sum: f64 = out.iter().sum();
    for x in &mut out {
        *x /= sum;
    }
    out
}

// Intervened value indices per node, or an error for unknown names/values.
fn intervention_indices(ctx: &EvalCtx, intervention: &BTreeMap<String, Value>) -> Result<Vec<Option<usize>>> {
    let mut fixed = vec![None; ctx.ncm.nodes().len()];
    for (name, &value) in intervention {
        let v = ctx.node_of(name)?;
        fixed[v] = Some(ctx.value_index(v, value)?);
    }
    Ok(fixed)
}

impl Ncm {
    /// Exact joint P(v | do(intervention)).
    pub fn induced_pmf(&self, intervention: &BTreeMap<String, Value>) -> Result<Pmf> {
        self.induced_pmf_with_budget(intervention, self.config().budget)
    }

    pub fn induced_pmf_with_budget(
        &self,
        intervention: &BTreeMap<String, Value>,
        budget: u128,
    ) -> Result<Pmf> {
        let entries = self.induced_entries(intervention, budget)?;
        let map: BTreeMap<Vec<Value>, f64> = entries
            .keys
            .into_iter()
            .zip(entries.probs)
            .filter(|(_, p)| *p > 0.0)
            .collect();
        Ok(Pmf::new(entries.vars, map)?)
    }

    /// Joint probabilities with a stable enumeration order, for callers that
    /// need positions (fitting, finite-difference checks).
    pub fn induced_entries(
        &self,
        intervention: &BTreeMap<String, Value>,
        budget: u128,
    ) -> Result<InducedEntries> {
        let ctx = EvalCtx::new(self)?;
        let fixed = intervention_indices(&ctx, intervention)?;
        let free: Vec<usize> = (0..self.nodes().len()).filter(|&v| fixed[v].is_none()).collect();
        let free_sizes: Vec<usize> = free.iter().map(|&v| ctx.dom[v]).collect();
        let free_count = free_sizes.iter().fold(1u128, |a, &s| a.saturating_mul(s as u128));
        let needed = ctx.unit_count().saturating_mul(free_count);
        if needed > budget {
            return Err(NcmError::BudgetExceeded { needed, budget });
        }

        let n_entries = free_count as usize;
        let mut probs = vec![0.0; n_entries];
        let clique_counts = ctx.clique_state_counts();
        let unit_total = ctx.unit_count() as usize;
        let mut vals: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
        for u_lin in 0..unit_total {
            let unit = decode_radix(u_lin, &clique_counts);
            let w = ctx.unit_weight(&unit);
            if w == 0.0 {
                continue;
            }
            for (f_lin, p_out) in probs.iter_mut().enumerate() {
                let digits = decode_radix(f_lin, &free_sizes);
                for (&v, &d) in free.iter().zip(&digits) {
                    vals[v] = d;
                }
                let mut q = w;
                for &v in &free {
                    let row = ctx.row(v, &vals, &unit);
                    q *= ctx.prob(v, row, vals[v]);
                    if q == 0.0 {
                        break;
                    }
                }
                *p_out += q;
            }
        }

        let vars: Vec<String> = self.nodes().iter().map(|n| n.name.clone()).collect();
        let mut keys = Vec::with_capacity(n_entries);
        for f_lin in 0..n_entries {
            let digits = decode_radix(f_lin, &free_sizes);
            let mut key: Vec<Value> = fixed
                .iter()
                .enumerate()
                .map(|(v, f)| self.nodes()[v].domain.values()[f.unwrap_or(0)])
                .collect();
            for (&v, &d) in free.iter().zip(&digits) {
                key[v] = self.nodes()[v].domain.values()[d];
            }
            keys.push(key);
        }
        Ok(InducedEntries { vars, keys, probs })
    }

    /// Gradient of Σ upstream[i] · P(keys[i] | do(intervention)) w.r.t. all
    /// logits; `upstream` is aligned with `induced_entries` order.
    pub fn induced_vjp(
        &self,
        intervention: &BTreeMap<String, Value>,
        upstream: &[f64],
        budget: u128,
    ) -> Result<Gradients> {
        let ctx = EvalCtx::new(self)?;
        let fixed = intervention_indices(&ctx, intervention)?;
        let free: Vec<usize> = (0..self.nodes().len()).filter(|&v| fixed[v].is_none()).collect();
        let free_sizes: Vec<usize> = free.iter().map(|&v| ctx.dom[v]).collect();
        let free_count = free_sizes.iter().fold(1u128, |a, &s| a.saturating_mul(s as u128));
        let needed = ctx.unit_count().saturating_mul(free_count);
        if needed > budget {
            return Err(NcmError::BudgetExceeded { needed, budget });
        }
        if upstream.len() != free_count as usize {
            return Err(NcmError::InvalidModel(format!(
                "upstream has {} weights, enumeration has {}",
                upstream.len(),
                free_count
            )));
        }

        let mut grads = Gradients::zeros_like(self);
        // Σ over (unit, entry) of t·(indicator − softmax) factorizes into a
        // weighted-count pass plus a softmax correction per row/state.
        let mut clique_state_sum: Vec<Vec<f64>> =
            ctx.clique_probs.iter().map(|p| vec![0.0; p.len()]).collect();
        let mut total = 0.0;
        let mut node_row_sum: Vec<Vec<f64>> = self
            .nodes()
            .iter()
            .enumerate()
            .map(|(v, n)| vec![0.0; n.logits.len() / ctx.dom[v]])
            .collect();
        let mut node_point: Vec<Vec<f64>> =
            self.nodes().iter().map(|n| vec![0.0; n.logits.len()]).collect();

        let clique_counts = ctx.clique_state_counts();
        let unit_total = ctx.unit_count() as usize;
        let mut vals: Vec<usize> = fixed.iter().map(|f| f.unwrap_or(0)).collect();
        let mut rows = vec![0usize; self.nodes().len()];
        for u_lin in 0..unit_total {
            let unit = decode_radix(u_lin, &clique_counts);
            let w = ctx.unit_weight(&unit);
            if w == 0.0 {
                continue;
            }
            let mut unit_sum = 0.0;
            for (f_lin, &a) in upstream.iter().enumerate() {
                if a == 0.0 {
                    continue;
                }
                let digits = decode_radix(f_lin, &free_sizes);
                for (&v, &d) in free.iter().zip(&digits) {
                    vals[v] = d;
                }
                let mut q = w;
                for &v in &free {
                    rows[v] = ctx.row(v, &vals, &unit);
                    q *= ctx.prob(v, rows[v], vals[v]);
                }
                let t = a * q;
                if t == 0.0 {
                    continue;
                }
                unit_sum += t;
                for &v in &free {
                    node_row_sum[v][rows[v]] += t;
                    node_point[v][rows[v] * ctx.dom[v] + vals[v]] += t;
                }
            }
            for (ci, &k) in unit.iter().enumerate() {
                clique_state_sum[ci][k] += unit_sum;
            }
            total += unit_sum;
        }

        for (ci, probs) in ctx.clique_probs.iter().enumerate() {
            for (k, &p) in probs.iter().enumerate() {
                grads.cliques[ci][k] = clique_state_sum[ci][k] - p * total;
            }
        }
        for v in 0..self.nodes().len() {
            let d = ctx.dom[v];
            for row in 0..node_row_sum[v].len() {
                let s = node_row_sum[v][row];
                if s == 0.0 {
                    continue;
                }
                for y in 0..d {
                    grads.nodes[v][row * d + y] =
                        node_point[v][row * d + y] - ctx.prob(v, row, y) * s;
                }
            }
        }
        Ok(grads)
    }

    /// P(events | given) for a counterfactual query, exactly.
    pub fn ctf_pmf(&self, query: &CtfQuery) -> Result<f64> {
        self.ctf_pmf_with_budget(query, self.config().budget)
    }

    pub fn ctf_pmf_with_budget(&self, query: &CtfQuery, budget: u128) -> Result<f64> {
        let ctx = EvalCtx::new(self)?;
        if query.given.is_empty() {
            return ctf_value(&ctx, &query.events, budget, None);
        }
        let mut joint = query.events.clone();
        joint.extend(query.given.iter().cloned());
        let num = ctf_value(&ctx, &joint, budget, None)?;
        let den = ctf_value(&ctx, &query.given, budget, None)?;
        if den == 0.0 {
            let printed = query
                .given
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            return Err(NcmError::ZeroProbabilityConditioning(printed));
        }
        Ok(num / den)
    }

    /// Query probability together with its gradient w.r.t. all logits.
    pub fn ctf_with_grad(&self, query: &CtfQuery, budget: u128) -> Result<(f64, Gradients)> {
        let ctx = EvalCtx::new(self)?;
        if query.given.is_empty() {
            let mut grads = Gradients::zeros_like(self);
            let value = ctf_value(&ctx, &query.events, budget, Some((&mut grads, 1.0)))?;
            return Ok((value, grads));
        }
        let mut joint = query.events.clone();
        joint.extend(query.given.iter().cloned());
        let mut g_num = Gradients::zeros_like(self);
        let num = ctf_value(&ctx, &joint, budget, Some((&mut g_num, 1.0)))?;
        let mut g_den = Gradients::zeros_like(self);
        let den = ctf_value(&ctx, &query.given, budget, Some((&mut g_den, 1.0)))?;
        if den == 0.0 {
            let printed = query
                .given
                .iter()
                .map(|e| e.to_string())
                .collect::<Vec<_>>()
                .join(", ");
            return Err(NcmError::ZeroProbabilityConditioning(printed));
        }
        // d(num/den) = g_num/den − (num/den²)·g_den
        let mut grads = Gradients::zeros_like(self);
        grads.scaled_add(1.0 / den, &g_num);
        grads.scaled_add(-num / (den * den), &g_den);
        Ok((num / den, grads))
    }
}

struct Worlds {
    // Per world, per node: value index forced by the intervention.
    interventions: Vec<Vec<Option<usize>>>,
    // Per world, per node: value index forced by an event.
    constraints: Vec<Vec<Option<usize>>>,
    feasible: bool,
}

fn build_worlds(ctx: &EvalCtx, events: &[CtfEvent]) -> Result<Worlds> {
    if events.is_empty() {
        return Err(NcmError::InvalidQuery("query has no events".into()));
    }
    let n = ctx.ncm.nodes().len();
    // Worlds keyed by normalized intervention; key order fixes world order.
    let mut keys: Vec<BTreeMap<String, Value>> = Vec::new();
    for event in events {
        let key: BTreeMap<String, Value> = event.intervention.iter().cloned().collect();
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    keys.sort();

    let mut interventions = Vec::with_capacity(keys.len());
    for key in &keys {
        interventions.push(intervention_indices(ctx, key)?);
    }
    let mut constraints = vec![vec![None; n]; keys.len()];
    let mut feasible = true;
    for event in events {
        let key: BTreeMap<String, Value> = event.intervention.iter().cloned().collect();
        let w = keys.iter().position(|k| *k == key).expect("world registered");
        let v = ctx.node_of(&event.var)?;
        let idx = ctx.value_index(v, event.value)?;
        if let Some(forced) = interventions[w][v] {
            feasible &= forced == idx;
            continue;
        }
        match constraints[w][v] {
            Some(prev) => feasible &= prev == idx,
            None => constraints[w][v] = Some(idx),
        }
    }
    Ok(Worlds {
        interventions,
        constraints,
        feasible,
    })
}

// The row realizing a binding interval endpoint, kept for the gradient pass.
#[derive(Clone, Copy)]
struct Bound {
    row: usize,
    idx: usize,
    cdf: f64,
}

/// P(all events hold) summed over units and joint cross-world assignments;
/// each assignment contributes Π_v |⋂_w [CDF(v_w−1), CDF(v_w))|. When
/// `grad_out` is given, also accumulates upstream · ∂value/∂logits.
fn ctf_value(
    ctx: &EvalCtx,
    events: &[CtfEvent],
    budget: u128,
    mut grad_out: Option<(&mut Gradients, f64)>,
) -> Result<f64> {
    let worlds = build_worlds(ctx, events)?;
    if !worlds.feasible {
        return Ok(0.0);
    }
    let n = ctx.ncm.nodes().len();

    // Free slots: (world, node) pairs not pinned by intervention or event.
    let mut fixed: Vec<Vec<Option<usize>>> = worlds.interventions.clone();
    for (w, per_node) in worlds.constraints.iter().enumerate() {
        for (v, c) in per_node.iter().enumerate() {
            if let Some(idx) = c {
                fixed[w][v] = Some(*idx);
            }
        }
    }
    let mut free_slots: Vec<(usize, usize)> = Vec::new();
    let mut free_sizes: Vec<usize> = Vec::new();
    for (w, per_node) in fixed.iter().enumerate() {
        for (v, f) in per_node.iter().enumerate() {
            if f.is_none() {
                free_slots.push((w, v));
                free_sizes.push(ctx.dom[v]);
            }
        }
    }
    let free_count = free_sizes.iter().fold(1u128, |a, &s| a.saturating_mul(s as u128));
    let needed = ctx.unit_count().saturating_mul(free_count);
    if needed > budget {
        return Err(NcmError::BudgetExceeded { needed, budget });
    }

    let clique_counts = ctx.clique_state_counts();
    let unit_total = ctx.unit_count() as usize;
    let mut vals: Vec<Vec<usize>> = fixed
        .iter()
        .map(|per_node| per_node.iter().map(|f| f.unwrap_or(0)).collect())
        .collect();

    let mut acc = 0.0;
    let mut clique_state_sum: Vec<Vec<f64>> =
        ctx.clique_probs.iter().map(|p| vec![0.0; p.len()]).collect();
    let mut total = 0.0;

    let mut lens = vec![0.0f64; n];
    let mut raws = vec![0.0f64; n];
    let mut lo_bound: Vec<Option<Bound>> = vec![None; n];
    let mut hi_bound: Vec<Option<Bound>> = vec![None; n];

    for u_lin in 0..unit_total {
        let unit = decode_radix(u_lin, &clique_counts);
        let w_u = ctx.unit_weight(&unit);
        if w_u == 0.0 {
            continue;
        }
        // Σ over this unit's assignments of upstream · w_u · Π lens, for the
        // clique-logit gradient.
        let mut unit_sum = 0.0;
        for f_lin in 0..free_count as usize {
            let digits = decode_radix(f_lin, &free_sizes);
            for (&(w, v), &d) in free_slots.iter().zip(&digits) {
                vals[w][v] = d;
            }

            for v in 0..n {
                let mut lo = 0.0f64;
                let mut hi = 1.0f64;
                lo_bound[v] = None;
                hi_bound[v] = None;
                for (w, world_fix) in worlds.interventions.iter().enumerate() {
                    if world_fix[v].is_some() {
                        continue;
                    }
                    let row = ctx.row(v, &vals[w], &unit);
                    let idx = vals[w][v];
                    let mut cdf_lo = 0.0;
                    for y in 0..idx {
                        cdf_lo += ctx.prob(v, row, y);
                    }
                    let cdf_hi = cdf_lo + ctx.prob(v, row, idx);
                    if cdf_lo > lo {
                        lo = cdf_lo;
                        lo_bound[v] = Some(Bound { row, idx, cdf: cdf_lo });
                    }
                    if cdf_hi < hi {
                        hi = cdf_hi;
                        hi_bound[v] = Some(Bound { row, idx, cdf: cdf_hi });
                    }
                }
                raws[v] = hi - lo;
                lens[v] = raws[v].max(0.0);
            }

            let product: f64 = lens.iter().product();
            acc += w_u * product;

            if let Some((grads, upstream)) = grad_out.as_mut() {
                let a = *upstream;
                unit_sum += a * w_u * product;

                // Response-logit gradient: each factor len_v moves only
                // through the rows realizing its binding bounds.
                let zeros = lens.iter().filter(|&&l| l == 0.0).count();
                if zeros <= 1 {
                    for v in 0..n {
                        if zeros == 1 && lens[v] != 0.0 {
                            continue;
                        }
                        // An overshot intersection is clamped at zero length
                        // and stays there under small moves: flat, no term.
                        if lens[v] == 0.0 && raws[v] < 0.0 {
                            continue;
                        }
                        if lo_bound[v].is_none() && hi_bound[v].is_none() {
                            continue;
                        }
                        let mut others = 1.0;
                        for (v2, &l) in lens.iter().enumerate() {
                            if v2 != v {
                                others *= l;
                            }
                        }
                        if others == 0.0 {
                            continue;
                        }
                        let scale = a * w_u * others;
                        let d = ctx.dom[v];
                        // hi = CDF(idx): ∂/∂l_y = q_y·(1[y ≤ idx] − CDF(idx))
                        if let Some(b) = hi_bound[v] {
                            for y in 0..d {
                                let q_y = ctx.prob(v, b.row, y);
                                let ind = if y <= b.idx { 1.0 } else { 0.0 };
                                grads.nodes[v][b.row * d + y] += scale * q_y * (ind - b.cdf);
                            }
                        }
                        // lo = CDF(idx−1): ∂/∂l_y = q_y·(1[y < idx] − CDF(idx−1))
                        if let Some(b) = lo_bound[v] {
                            for y in 0..d {
                                let q_y = ctx.prob(v, b.row, y);
                                let ind = if y < b.idx { 1.0 } else { 0.0 };
                                grads.nodes[v][b.row * d + y] -= scale * q_y * (ind - b.cdf);
                            }
                        }
                    }
                }
            }
        }
        if grad_out.is_some() {
            for (ci, &k) in unit.iter().enumerate() {
                clique_state_sum[ci][k] += unit_sum;
            }
            total += unit_sum;
        }
    }

    if let Some((grads, _)) = grad_out {
        for (ci, probs) in ctx.clique_probs.iter().enumerate() {
            for (k, &p) in probs.iter().enumerate() {
                grads.cliques[ci][k] += clique_state_sum[ci][k] - p * total;
            }
        }
    }

    Ok(acc)
}
