//! Model structure: cliques, response tables, construction, checkpoints.

use std::collections::{BTreeMap, BTreeSet};
use std::io::{Read as IoRead, Write as IoWrite};

use graphs::Cdag;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use scm_core::{Domain, Scm, Value, DEFAULT_ENUM_BUDGET};
use serde::{Deserialize, Serialize};

use crate::cliques::maximal_cliques;
use crate::error::{NcmError, Result};

pub const DEFAULT_MAX_CLIQUE_STATES: usize = 64;

// Hard tables put +HARD_LOGIT on the selected value and -HARD_LOGIT
// elsewhere; the off-value softmax mass is ~e^(-2*HARD_LOGIT) ≈ 4e-18.
pub(crate) const HARD_LOGIT: f64 = 20.0;

// exp(-1e4) underflows to exactly 0.0 while the logit itself stays finite
// and JSON-serializable, unlike -inf.
pub(crate) const ZERO_MASS_LOGIT: f64 = -1.0e4;

const CHECKPOINT_FORMAT: &str = "ncm-checkpoint-v1";

/// How `fit` walks the data each iteration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FitMode {
    /// Exact cross-entropy over the full data support.
    Exact,
    /// Each iteration draws `batch_size` support rows (with replacement,
    /// proportional to data mass) and averages their log-losses; unbiased
    /// for the exact cross-entropy.
    Stochastic { batch_size: usize },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub iterations: usize,
    pub mode: FitMode,
    /// Query-regularizer strength at the first iteration; log-decays to
    /// `lambda_end` by the last.
    pub lambda_start: f64,
    pub lambda_end: f64,
    pub seed: u64,
    /// Cap on each clique's exogenous state count; the uncapped size is the
    /// response-function bound Π_V |dom(V)|^(#parent configs).
    pub max_clique_states: usize,
    pub budget: u128,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-2,
            iterations: 2000,
            mode: FitMode::Exact,
            lambda_start: 1e-4,
            lambda_end: 1e-8,
            seed: 0,
            max_clique_states: DEFAULT_MAX_CLIQUE_STATES,
            budget: DEFAULT_ENUM_BUDGET,
        }
    }
}

/// One maximal bidirected clique and the logits of its exogenous
/// categorical.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Clique {
    pub members: Vec<String>,
    pub logits: Vec<f64>,
}

impl Clique {
    pub fn states(&self) -> usize {
        self.logits.len()
    }
}

/// Response table of one node.
///
/// `logits` is row-major with `|domain|` columns. Rows are indexed by the
/// pair (parent tuple, clique tuple): row = parent_index * Π(clique states)
/// + clique_index. The parent tuple runs over `parents` (sorted by name)
/// with each value indexed by its position in that parent's domain, last
/// parent fastest; the clique tuple runs over `cliques` (ascending), last
/// clique fastest.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeResponse {
    pub name: String,
    pub domain: Domain,
    pub parents: Vec<String>,
    pub cliques: Vec<usize>,
    pub logits: Vec<f64>,
}

/// Graph-constrained parametric SCM over finite domains: one exogenous
/// categorical per maximal bidirected clique, a softmax response table per
/// node over (parent values, containing-clique states), and an implicit
/// per-node realization uniform applied by inverse CDF under the domain
/// ordering. Every distribution it induces is computed exactly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Ncm {
    cdag: Cdag,
    cliques: Vec<Clique>,
    nodes: Vec<NodeResponse>,
    config: TrainConfig,
}

/// Per-parameter partials, parallel to the model's logit arrays.
#[derive(Clone, Debug)]
pub struct Gradients {
    pub cliques: Vec<Vec<f64>>,
    pub nodes: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros_like(ncm: &Ncm) -> Self {
        Gradients {
            cliques: ncm.cliques.iter().map(|c| vec![0.0; c.logits.len()]).collect(),
            nodes: ncm.nodes.iter().map(|n| vec![0.0; n.logits.len()]).collect(),
        }
    }

    /// self += scale * other
    pub fn scaled_add(&mut self, scale: f64, other: &Gradients) {
        for (a, b) in self.cliques.iter_mut().zip(&other.cliques) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
        for (a, b) in self.nodes.iter_mut().zip(&other.nodes) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += scale * y;
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.cliques
            .iter()
            .chain(self.nodes.iter())
            .flat_map(|v| v.iter())
            .fold(0.0f64, |m, x| m.max(x.abs()))
    }

    /// One flat vector in the same coordinate order as `Ncm::flat_logits`.
    pub fn flatten(&self) -> Vec<f64> {
        self.cliques
            .iter()
            .chain(self.nodes.iter())
            .flat_map(|v| v.iter().copied())
            .collect()
    }
}

impl Ncm {
    pub fn cdag(&self) -> &Cdag {
        &self.cdag
    }

    pub fn cliques(&self) -> &[Clique] {
        &self.cliques
    }

    pub fn nodes(&self) -> &[NodeResponse] {
        &self.nodes
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn node(&self, name: &str) -> Result<&NodeResponse> {
        self.nodes
            .iter()
            .find(|n| n.name == name)
            .ok_or_else(|| NcmError::InvalidModel(format!("unknown node {name}")))
    }

    pub fn logit_count(&self) -> usize {
        self.cliques.iter().map(|c| c.logits.len()).sum::<usize>()
            + self.nodes.iter().map(|n| n.logits.len()).sum::<usize>()
    }

    /// All logits as one vector: cliques in order, then nodes in order.
    pub fn flat_logits(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.logit_count());
        for c in &self.cliques {
            out.extend_from_slice(&c.logits);
        }
        for n in &self.nodes {
            out.extend_from_slice(&n.logits);
        }
        out
    }

    pub fn set_flat_logits(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.logit_count() {
            return Err(NcmError::InvalidModel(format!(
                "expected {} logits, got {}",
                self.logit_count(),
                flat.len()
            )));
        }
        let mut at = 0;
        for c in &mut self.cliques {
            let len = c.logits.len();
            c.logits.copy_from_slice(&flat[at..at + len]);
            at += len;
        }
        for n in &mut self.nodes {
            let len = n.logits.len();
            n.logits.copy_from_slice(&flat[at..at + len]);
            at += len;
        }
        Ok(())
    }

    /// logits += scale * grads
    pub fn apply_step(&mut self, grads: &Gradients, scale: f64) {
        for (c, g) in self.cliques.iter_mut().zip(&grads.cliques) {
            for (l, d) in c.logits.iter_mut().zip(g) {
                *l += scale * d;
            }
        }
        for (n, g) in self.nodes.iter_mut().zip(&grads.nodes) {
            for (l, d) in n.logits.iter_mut().zip(g) {
                *l += scale * d;
            }
        }
    }

    pub(crate) fn logits_finite(&self) -> bool {
        self.cliques
            .iter()
            .map(|c| &c.logits)
            .chain(self.nodes.iter().map(|n| &n.logits))
            .all(|v| v.iter().all(|x| x.is_finite()))
    }

    pub(crate) fn node_index(&self) -> BTreeMap<&str, usize> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.name.as_str(), i))
            .collect()
    }

    /// Node indices in dependency order (parents before children).
    pub(crate) fn topo_order(&self) -> Result<Vec<usize>> {
        topo_order(&self.cdag)
    }

    pub fn save_checkpoint<W: IoWrite>(&self, writer: W) -> Result<()> {
        #[derive(Serialize)]
        struct File<'a> {
            format: &'static str,
            model: &'a Ncm,
        }
        serde_json::to_writer_pretty(
            writer,
            &File {
                format: CHECKPOINT_FORMAT,
                model: self,
            },
        )?;
        Ok(())
    }

    pub fn load_checkpoint<R: IoRead>(reader: R) -> Result<Ncm> {
        #[derive(Deserialize)]
        struct File {
            format: String,
            model: Ncm,
        }
        let file: File = serde_json::from_reader(reader)?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(NcmError::InvalidModel(format!(
                "unsupported checkpoint format {:?}",
                file.format
            )));
        }
        file.model.validate()?;
        Ok(file.model)
    }

    /// Structural consistency: cliques are exactly the maximal bidirected
    /// cliques, parents match the graph, logit arrays have the advertised
    /// shapes, and the directed part is acyclic.
    pub fn validate(&self) -> Result<()> {
        let diagram = &self.cdag.diagram;
        topo_order(&self.cdag)?;
        if self.nodes.len() != diagram.nodes().len() {
            return Err(NcmError::InvalidModel(
                "one response table per graph node required".into(),
            ));
        }
        for (node, name) in self.nodes.iter().zip(diagram.nodes()) {
            if &node.name != name {
                return Err(NcmError::InvalidModel(format!(
                    "response tables out of order: {} vs {}",
                    node.name, name
                )));
            }
        }
        let expect = maximal_cliques(diagram.nodes(), diagram.bidirected());
        let got: Vec<Vec<String>> = self.cliques.iter().map(|c| c.members.clone()).collect();
        if got != expect {
            return Err(NcmError::InvalidModel(
                "cliques are not the maximal bidirected cliques".into(),
            ));
        }
        for c in &self.cliques {
            if c.logits.is_empty() {
                return Err(NcmError::InvalidModel(format!(
                    "clique {:?} has no states",
                    c.members
                )));
            }
        }
        for (i, node) in self.nodes.iter().enumerate() {
            if node.domain.values().is_empty() {
                return Err(NcmError::InvalidModel(format!("{} has empty domain", node.name)));
            }
            let parents: Vec<String> = diagram
                .parents(&node.name)
                .into_iter()
                .map(|s| s.to_string())
                .collect();
            if node.parents != parents {
                return Err(NcmError::InvalidModel(format!(
                    "{}: parents {:?} do not match graph parents {:?}",
                    node.name, node.parents, parents
                )));
            }
            let containing: Vec<usize> = self
                .cliques
                .iter()
                .enumerate()
                .filter(|(_, c)| c.members.contains(&node.name))
                .map(|(ci, _)| ci)
                .collect();
            if node.cliques != containing {
                return Err(NcmError::InvalidModel(format!(
                    "{}: clique list {:?} does not match containing cliques {:?}",
                    node.name, node.cliques, containing
                )));
            }
            let rows = self.row_count(i)?;
            let want = rows
                .checked_mul(node.domain.values().len())
                .ok_or_else(|| NcmError::InvalidModel("response table overflow".into()))?;
            if node.logits.len() != want {
                return Err(NcmError::InvalidModel(format!(
                    "{}: expected {} logits, got {}",
                    node.name,
                    want,
                    node.logits.len()
                )));
            }
        }
        Ok(())
    }

    fn row_count(&self, node_idx: usize) -> Result<usize> {
        let node = &self.nodes[node_idx];
        let mut rows: usize = 1;
        for p in &node.parents {
            let parent = self.node(p)?;
            rows = rows
                .checked_mul(parent.domain.values().len())
                .ok_or_else(|| NcmError::InvalidModel("response table overflow".into()))?;
        }
        for &ci in &node.cliques {
            rows = rows
                .checked_mul(self.cliques[ci].states())
                .ok_or_else(|| NcmError::InvalidModel("response table overflow".into()))?;
        }
        Ok(rows)
    }
}

fn topo_order(cdag: &Cdag) -> Result<Vec<usize>> {
    let diagram = &cdag.diagram;
    let names = diagram.nodes();
    let index: BTreeMap<&str, usize> = names
        .iter()
        .enumerate()
        .map(|(i, n)| (n.as_str(), i))
        .collect();
    let mut in_deg = vec![0usize; names.len()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); names.len()];
    for (a, b) in diagram.directed() {
        in_deg[index[b.as_str()]] += 1;
        children[index[a.as_str()]].push(index[b.as_str()]);
    }
    let mut ready: BTreeSet<usize> = (0..names.len()).filter(|&i| in_deg[i] == 0).collect();
    let mut order = Vec::with_capacity(names.len());
    while let Some(&i) = ready.iter().next() {
        ready.remove(&i);
        order.push(i);
        for &c in &children[i] {
            in_deg[c] -= 1;
            if in_deg[c] == 0 {
                ready.insert(c);
            }
        }
    }
    if order.len() != names.len() {
        return Err(NcmError::InvalidModel("directed part has a cycle".into()));
    }
    Ok(order)
}

/// Number of response functions a clique's exogenous must index to be fully
/// expressive: Π over members of |dom|^(#parent configs), saturating.
fn canonical_clique_bound(
    members: &[String],
    domains: &BTreeMap<String, Domain>,
    cdag: &Cdag,
) -> u128 {
    let mut bound: u128 = 1;
    for v in members {
        let d = domains[v].values().len() as u128;
        if d <= 1 {
            continue;
        }
        let mut parent_configs: u128 = 1;
        for p in cdag.diagram.parents(v) {
            parent_configs = parent_configs.saturating_mul(domains[p].values().len() as u128);
        }
        // d^parent_configs, saturating; d ≥ 2, so 127 doublings overflow.
        if parent_configs > 127 {
            return u128::MAX;
        }
        let mut factor: u128 = 1;
        for _ in 0..parent_configs {
            factor = factor.saturating_mul(d);
        }
        bound = bound.saturating_mul(factor);
    }
    bound
}

/// Build a randomly initialized model over `cdag`: one exogenous categorical
/// per maximal bidirected clique (state count = min(response-function bound,
/// `config.max_clique_states`)), logits drawn uniform(-0.1, 0.1) from
/// `config.seed` — cliques first, then nodes, in order.
pub fn build_ncm(
    cdag: &Cdag,
    domains: &BTreeMap<String, Domain>,
    config: &TrainConfig,
) -> Result<Ncm> {
    if config.max_clique_states == 0 {
        return Err(NcmError::InvalidConfig("max_clique_states must be ≥ 1".into()));
    }
    let diagram = &cdag.diagram;
    for name in diagram.nodes() {
        let dom = domains
            .get(name)
            .ok_or_else(|| NcmError::InvalidModel(format!("no domain for node {name}")))?;
        if dom.values().is_empty() {
            return Err(NcmError::InvalidModel(format!("{name} has empty domain")));
        }
    }
    for name in domains.keys() {
        if !diagram.has_node(name) {
            return Err(NcmError::InvalidModel(format!(
                "domain given for unknown node {name}"
            )));
        }
    }

    let clique_members = maximal_cliques(diagram.nodes(), diagram.bidirected());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut cliques = Vec::with_capacity(clique_members.len());
    for members in clique_members {
        let bound = canonical_clique_bound(&members, domains, cdag);
        let states = bound.min(config.max_clique_states as u128).max(1) as usize;
        let logits = (0..states).map(|_| rng.random_range(-0.1..0.1)).collect();
        cliques.push(Clique { members, logits });
    }

    let mut nodes = Vec::with_capacity(diagram.nodes().len());
    for name in diagram.nodes() {
        let domain = domains[name].clone();
        let parents: Vec<String> = diagram
            .parents(name)
            .into_iter()
            .map(|s| s.to_string())
            .collect();
        let node_cliques: Vec<usize> = cliques
            .iter()
            .enumerate()
            .filter(|(_, c)| c.members.iter().any(|m| m == name))
            .map(|(ci, _)| ci)
            .collect();
        let mut rows: u128 = 1;
        for p in &parents {
            rows = rows.saturating_mul(domains[p].values().len() as u128);
        }
        for &ci in &node_cliques {
            rows = rows.saturating_mul(cliques[ci].states() as u128);
        }
        let len = rows.saturating_mul(domain.values().len() as u128);
        if len > 10_000_000 {
            return Err(NcmError::InvalidModel(format!(
                "{name}: response table would need {len} logits"
            )));
        }
        let logits = (0..len as usize).map(|_| rng.random_range(-0.1..0.1)).collect();
        nodes.push(NodeResponse {
            name: name.clone(),
            domain,
            parents,
            cliques: node_cliques,
            logits,
        });
    }

    let ncm = Ncm {
        cdag: cdag.clone(),
        cliques,
        nodes,
        config: config.clone(),
    };
    ncm.validate()?;
    Ok(ncm)
}

/// Encode an explicit SCM as a hard-table model with identical semantics:
/// each exogenous block becomes part of the state of one clique covering
/// all its readers, clique logits are log block probabilities, and response
/// rows put all mass on the mechanism's output.
pub fn encode_scm(scm: &Scm) -> Result<Ncm> {
    let diagram = scm.induced_diagram();
    let cdag = Cdag { diagram };
    let diagram = &cdag.diagram;
    let clique_members = maximal_cliques(diagram.nodes(), diagram.bidirected());

    // Readers of each block, then the first clique covering all of them.
    let mut readers: BTreeMap<&str, BTreeSet<&str>> = BTreeMap::new();
    let mut mechanisms = BTreeMap::new();
    for var in diagram.nodes() {
        let mech = scm.mechanism(var)?;
        for exo in &mech.exo_parents {
            readers
                .entry(scm.exogenous_block(exo)?.name.as_str())
                .or_default()
                .insert(var.as_str());
        }
        mechanisms.insert(var.clone(), mech);
    }
    let mut clique_blocks: Vec<Vec<&scm_core::ExogenousBlock>> =
        vec![Vec::new(); clique_members.len()];
    for block in scm.exogenous() {
        let Some(consumers) = readers.get(block.name.as_str()) else {
            continue; // unread block: no effect on any distribution
        };
        let ci = clique_members
            .iter()
            .position(|members| consumers.iter().all(|v| members.iter().any(|m| m == v)))
            .ok_or_else(|| {
                NcmError::InvalidModel(format!("no clique covers readers of {}", block.name))
            })?;
        clique_blocks[ci].push(block);
    }

    let mut cliques = Vec::with_capacity(clique_members.len());
    for (members, blocks) in clique_members.into_iter().zip(&clique_blocks) {
        let mut states: u128 = 1;
        for b in blocks {
            states = states.saturating_mul(b.domain.values().len() as u128);
        }
        if states > 1_000_000 {
            return Err(NcmError::InvalidModel(format!(
                "clique {members:?} needs {states} states to encode its blocks"
            )));
        }
        let states = states as usize;
        let mut logits = Vec::with_capacity(states);
        for atom in 0..states {
            let mut p = 1.0;
            for (b, idx) in decode_atom(blocks, atom) {
                p *= b.pmf[idx];
            }
            logits.push(if p > 0.0 { p.ln() } else { ZERO_MASS_LOGIT });
        }
        cliques.push(Clique { members, logits });
    }

    let mut nodes = Vec::with_capacity(diagram.nodes().len());
    for name in diagram.nodes() {
        let mech = &mechanisms[name];
        let domain = scm.variable(name)?.domain.clone();
        let parents: Vec<String> = diagram
            .parents(name)
            .into_iter()
            .map(|s| s.to_string())
            .collect();
        let node_cliques: Vec<usize> = cliques
            .iter()
            .enumerate()
            .filter(|(_, c)| c.members.iter().any(|m| m == name))
            .map(|(ci, _)| ci)
            .collect();

        let parent_sizes: Vec<usize> = parents
            .iter()
            .map(|p| scm.variable(p).map(|v| v.domain.values().len()))
            .collect::<std::result::Result<_, _>>()?;
        let pa_rows: usize = parent_sizes.iter().product();
        let clique_sizes: Vec<usize> = node_cliques.iter().map(|&ci| cliques[ci].states()).collect();
        let cl_rows: usize = clique_sizes.iter().product();

        let mut logits = vec![-HARD_LOGIT; pa_rows * cl_rows * domain.values().len()];
        for pa_idx in 0..pa_rows {
            let pa_digits = decode_radix(pa_idx, &parent_sizes);
            let mut pa_vals: BTreeMap<&str, Value> = BTreeMap::new();
            for (p, &digit) in parents.iter().zip(&pa_digits) {
                pa_vals.insert(p.as_str(), scm.variable(p)?.domain.values()[digit]);
            }
            for cl_idx in 0..cl_rows {
                let cl_digits = decode_radix(cl_idx, &clique_sizes);
                let mut exo_vals: BTreeMap<&str, Value> = BTreeMap::new();
                for (&ci, &atom) in node_cliques.iter().zip(&cl_digits) {
                    for (b, idx) in decode_atom(&clique_blocks[ci], atom) {
                        exo_vals.insert(b.name.as_str(), b.domain.values()[idx]);
                    }
                }
                let mut key_parts = Vec::with_capacity(mech.endo_parents.len() + mech.exo_parents.len());
                for p in &mech.endo_parents {
                    key_parts.push(pa_vals[p.as_str()].to_string());
                }
                for e in &mech.exo_parents {
                    let v = exo_vals.get(e.as_str()).ok_or_else(|| {
                        NcmError::InvalidModel(format!("{name}: block {e} not in a containing clique"))
                    })?;
                    key_parts.push(v.to_string());
                }
                let key = key_parts.join(",");
                let out = *mech.table.get(&key).ok_or_else(|| {
                    NcmError::InvalidModel(format!("{name}: mechanism table misses row {key:?}"))
                })?;
                let col = domain
                    .values()
                    .iter()
                    .position(|&v| v == out)
                    .ok_or_else(|| {
                        NcmError::InvalidModel(format!("{name}: output {out} outside domain"))
                    })?;
                let row = pa_idx * cl_rows + cl_idx;
                logits[row * domain.values().len() + col] = HARD_LOGIT;
            }
        }
        nodes.push(NodeResponse {
            name: name.clone(),
            domain,
            parents,
            cliques: node_cliques,
            logits,
        });
    }

    let max_states = cliques.iter().map(Clique::states).max().unwrap_or(1);
    let ncm = Ncm {
        cdag: cdag.clone(),
        cliques,
        nodes,
        config: TrainConfig {
            max_clique_states: max_states.max(DEFAULT_MAX_CLIQUE_STATES),
            ..TrainConfig::default()
        },
    };
    ncm.validate()?;
    Ok(ncm)
}

// Atom index → (block, value index) pairs; last block varies fastest.
fn decode_atom<'a>(
    blocks: &[&'a scm_core::ExogenousBlock],
    atom: usize,
) -> Vec<(&'a scm_core::ExogenousBlock, usize)> {
    let sizes: Vec<usize> = blocks.iter().map(|b| b.domain.values().len()).collect();
    let digits = decode_radix(atom, &sizes);
    blocks.iter().copied().zip(digits).collect()
}

/// Mixed-radix digits of `index` over `sizes`, last digit fastest.
pub(crate) fn decode_radix(index: usize, sizes: &[usize]) -> Vec<usize> {
    let mut digits = vec![0; sizes.len()];
    let mut rest = index;
    for (i, &s) in sizes.iter().enumerate().rev() {
        digits[i] = rest % s;
        rest /= s;
    }
    digits
}

