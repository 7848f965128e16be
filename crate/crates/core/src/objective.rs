//! Clique-based probabilistic objective over label distributions and its
//! minimization over the product of probability simplices.
//!
//! For a clique `(n_1, ..., n_k)` the energy is
//!
//! ```text
//! E = Σ_{θ ∈ {1..l}^k} C_θ · p^{n_1}_{θ_1} ··· p^{n_k}_{θ_k},   C_θ = k! / (e_1! ··· e_l!)
//! ```
//!
//! where `e_i` counts occurrences of label `i` in `θ`. The objective sums
//! `W_k · E` over a clique set. Label-diverse assignments carry the largest
//! coefficients, so minimizing pulls clique members toward a shared label.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::clique::CliqueSet;
use crate::error::{Error, Result};
use crate::field::ProbabilityField;
use crate::graph::{Graph, LabeledSets, NodeId};

/// Ceiling on `l^k` entries in one coefficient table.
pub const TUPLE_CEILING: usize = 10_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum WeightMode {
    /// `W_k = 1`
    #[default]
    Uniform,
    /// `W_k = k`
    Linear,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(WeightMode::Uniform),
            "linear" => Ok(WeightMode::Linear),
            other => Err(Error::Config(format!(
                "unknown weight scheme `{other}` (expected uniform|linear)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct WeightScheme {
    pub mode: WeightMode,
    /// Explicit per-size weights that take precedence over `mode`.
    pub overrides: BTreeMap<usize, f64>,
}

impl WeightScheme {
    pub fn uniform() -> Self {
        WeightScheme::default()
    }

    pub fn linear() -> Self {
        WeightScheme {
            mode: WeightMode::Linear,
            overrides: BTreeMap::new(),
        }
    }

    pub fn weight(&self, k: usize) -> f64 {
        if let Some(&w) = self.overrides.get(&k) {
            return w;
        }
        match self.mode {
            WeightMode::Uniform => 1.0,
            WeightMode::Linear => k as f64,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self.overrides.iter().find(|(_, &w)| !(w > 0.0 && w.is_finite())) {
            Some((k, w)) => Err(Error::Config(format!("weight W_{k} = {w} must be positive"))),
            None => Ok(()),
        }
    }
}

/// `k! / (e_1! ··· e_l!)` for the label tuple `theta` (0-based labels).
pub fn multinomial_coefficient(theta: &[usize], num_labels: usize) -> Result<u128> {
    let mut counts = vec![0u32; num_labels];
    for &m in theta {
        if m >= num_labels {
            return Err(Error::Config(format!(
                "label {} outside [1,{num_labels}]",
                m + 1
            )));
        }
        counts[m] += 1;
    }
    // product of binomials C(e_1+...+e_i, e_i)
    let mut acc: u128 = 1;
    let mut seen: u128 = 0;
    for &e in &counts {
        for j in 1..=e as u128 {
            seen += 1;
            acc = acc
                .checked_mul(seen)
                .ok_or_else(|| Error::Config("multinomial coefficient overflows".into()))?
                / j;
        }
    }
    Ok(acc)
}

/// Coefficients `C_θ` for every clique size in use, with `θ` encoded in
/// base `l` (first position most significant).
#[derive(Debug, Clone)]
pub struct MultinomialTable {
    num_labels: usize,
    tables: BTreeMap<usize, Vec<f64>>,
}

impl MultinomialTable {
    pub fn new(num_labels: usize, sizes: impl IntoIterator<Item = usize>) -> Result<Self> {
        if num_labels == 0 {
            return Err(Error::Config("at least one label is required".into()));
        }
        let mut tables = BTreeMap::new();
        for k in sizes {
            if tables.contains_key(&k) {
                continue;
            }
            let entries = (num_labels as u128).checked_pow(k as u32);
            let entries = match entries {
                Some(e) if e <= TUPLE_CEILING as u128 => e as usize,
                _ => {
                    return Err(Error::MemoryGuard(format!(
                        "{num_labels}^{k} label tuples for {k}-cliques exceed {TUPLE_CEILING}; \
                         cap the clique size (k_cap)"
                    )))
                }
            };
            tables.insert(k, build_table(num_labels, k, entries));
        }
        Ok(MultinomialTable { num_labels, tables })
    }

    pub fn num_labels(&self) -> usize {
        self.num_labels
    }

    /// Coefficients for size `k`, if tabulated.
    pub fn coefficients(&self, k: usize) -> Option<&[f64]> {
        self.tables.get(&k).map(Vec::as_slice)
    }
}

fn build_table(l: usize, k: usize, entries: usize) -> Vec<f64> {
    let mut fact = vec![1.0f64; k + 1];
    for i in 1..=k {
        fact[i] = fact[i - 1] * i as f64;
    }
    let mut out = Vec::with_capacity(entries);
    let mut digits = vec![0usize; k];
    let mut counts = vec![0usize; l];
    counts[0] = k;
    for _ in 0..entries {
        let denom: f64 = counts.iter().map(|&e| fact[e]).product();
        out.push((fact[k] / denom).round());
        // odometer increment, last position fastest
        for pos in (0..k).rev() {
            counts[digits[pos]] -= 1;
            digits[pos] += 1;
            if digits[pos] < l {
                counts[digits[pos]] += 1;
                break;
            }
            digits[pos] = 0;
            counts[0] += 1;
        }
    }
    out
}

fn energy_dfs(rows: &[&[f64]], coeffs: &[f64], l: usize, pos: usize, code: usize, prefix: f64) -> f64 {
    if pos == rows.len() {
        return coeffs[code] * prefix;
    }
    let mut s = 0.0;
    for (m, &p) in rows[pos].iter().enumerate() {
        let next = prefix * p;
        if next != 0.0 {
            s += energy_dfs(rows, coeffs, l, pos + 1, code * l + m, next);
        }
    }
    s
}

/// Returns `S = Σ_completions C_θ Π_{i>=pos} p`, accumulating
/// `prefix · S_child` into `grad[pos][m]`.
fn energy_grad_dfs(
    rows: &[&[f64]],
    coeffs: &[f64],
    l: usize,
    pos: usize,
    code: usize,
    prefix: f64,
    grad: &mut [f64],
) -> f64 {
    if pos == rows.len() {
        return coeffs[code];
    }
    let mut s = 0.0;
    for m in 0..l {
        let p = rows[pos][m];
        let child = energy_grad_dfs(rows, coeffs, l, pos + 1, code * l + m, prefix * p, grad);
        grad[pos * l + m] += prefix * child;
        s += p * child;
    }
    s
}

fn gather_rows<'a>(clique: &[NodeId], field: &'a ProbabilityField) -> Vec<&'a [f64]> {
    clique.iter().map(|&v| field.row(v)).collect()
}

/// Energy of a single clique.
pub fn clique_energy(clique: &[NodeId], field: &ProbabilityField, table: &MultinomialTable) -> Result<f64> {
    let coeffs = table.coefficients(clique.len()).ok_or_else(|| {
        Error::Config(format!("no coefficient table for {}-cliques", clique.len()))
    })?;
    let rows = gather_rows(clique, field);
    Ok(energy_dfs(&rows, coeffs, table.num_labels(), 0, 0, 1.0))
}

/// Objective over a fixed clique set with precomputed coefficient tables.
#[derive(Debug, Clone)]
pub struct Objective<'a> {
    cliques: &'a CliqueSet,
    table: MultinomialTable,
    weights: WeightScheme,
}

impl<'a> Objective<'a> {
    pub fn new(cliques: &'a CliqueSet, num_labels: usize, weights: WeightScheme) -> Result<Self> {
        weights.validate()?;
        let table = MultinomialTable::new(num_labels, cliques.sizes())?;
        Ok(Objective {
            cliques,
            table,
            weights,
        })
    }

    fn check(&self, field: &ProbabilityField) -> Result<()> {
        if field.num_labels() != self.table.num_labels() {
            return Err(Error::Dimension(format!(
                "field has {} labels, objective expects {}",
                field.num_labels(),
                self.table.num_labels()
            )));
        }
        if let Some(c) = self.cliques.iter().find(|c| c.iter().any(|&v| v >= field.num_nodes())) {
            return Err(Error::Dimension(format!(
                "clique {c:?} outside a field of {} nodes",
                field.num_nodes()
            )));
        }
        Ok(())
    }

    pub fn value(&self, field: &ProbabilityField) -> Result<f64> {
        self.check(field)?;
        let l = self.table.num_labels();
        let mut total = 0.0;
        for k in self.cliques.sizes() {
            let coeffs = self.table.coefficients(k).expect("table covers every size");
            let sum: f64 = self
                .cliques
                .of_size(k)
                .map(|c| energy_dfs(&gather_rows(c, field), coeffs, l, 0, 0, 1.0))
                .sum();
            total += self.weights.weight(k) * sum;
        }
        Ok(total)
    }

    /// Objective value and the full `N x l` gradient, row-major.
    pub fn value_and_gradient(&self, field: &ProbabilityField) -> Result<(f64, Vec<f64>)> {
        self.check(field)?;
        let l = self.table.num_labels();
        let mut grad = vec![0.0; field.num_nodes() * l];
        let mut total = 0.0;
        let mut local = Vec::new();
        for k in self.cliques.sizes() {
            let coeffs = self.table.coefficients(k).expect("table covers every size");
            let w = self.weights.weight(k);
            let mut sum = 0.0;
            for c in self.cliques.of_size(k) {
                local.clear();
                local.resize(k * l, 0.0);
                sum += energy_grad_dfs(&gather_rows(c, field), coeffs, l, 0, 0, 1.0, &mut local);
                for (pos, &v) in c.iter().enumerate() {
                    let dst = &mut grad[v * l..(v + 1) * l];
                    for (g, &d) in dst.iter_mut().zip(&local[pos * l..(pos + 1) * l]) {
                        *g += w * d;
                    }
                }
            }
            total += w * sum;
        }
        Ok((total, grad))
    }
}

pub fn objective(set: &CliqueSet, field: &ProbabilityField, weights: &WeightScheme) -> Result<f64> {
    Objective::new(set, field.num_labels(), weights.clone())?.value(field)
}

/// `∂J/∂p^n_m` for every node and label, row-major `N x l`.
pub fn gradient(set: &CliqueSet, field: &ProbabilityField, weights: &WeightScheme) -> Result<Vec<f64>> {
    Ok(Objective::new(set, field.num_labels(), weights.clone())?
        .value_and_gradient(field)?
        .1)
}

/// Euclidean projection onto `{x >= 0, Σx = 1}` by the sort-and-threshold
/// method. Points already on the simplex come back unchanged.
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    let sum: f64 = v.iter().sum();
    let tol = 4.0 * f64::EPSILON * v.len() as f64;
    if v.iter().all(|&x| x >= 0.0) && (sum - 1.0).abs() <= tol {
        return v.to_vec();
    }
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumulative += ui;
        let t = (cumulative - 1.0) / (i + 1) as f64;
        if ui - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub weights: WeightScheme,
    /// Recorded for provenance; full-batch training draws no randomness.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 0.1,
            epochs: 20,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            weights: WeightScheme::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(Error::Config("Adam betas must lie in [0,1)".into()));
        }
        self.weights.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Objective after this epoch's update.
    pub objective: f64,
    /// Norm of the update direction (gradient restricted to free rows and
    /// projected onto each simplex's tangent plane).
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub field: ProbabilityField,
    pub initial_objective: f64,
    pub trace: Vec<EpochRecord>,
}

impl TrainOutcome {
    pub fn final_objective(&self) -> f64 {
        self.trace
            .last()
            .map_or(self.initial_objective, |r| r.objective)
    }
}

/// Full-gradient Adam over unlabeled rows with per-row simplex projection.
///
/// Each row's gradient is centered before the Adam update so the step lies
/// in the simplex's tangent plane; Adam's per-coordinate scaling would
/// otherwise turn a constant offset into equal steps that the projection
/// cancels. Labeled rows are held at their one-hot.
pub fn train(
    graph: &Graph,
    clique_set: &CliqueSet,
    init: &ProbabilityField,
    labeled: &LabeledSets,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    let n = graph.num_nodes();
    if init.num_nodes() != n || labeled.num_nodes() != n {
        return Err(Error::Dimension(format!(
            "graph has {n} nodes, init {} and prior {}",
            init.num_nodes(),
            labeled.num_nodes()
        )));
    }
    let l = init.num_labels();
    let objective = Objective::new(clique_set, l, config.weights.clone())?;
    let mut field = init.clone();
    field.clamp_labeled(labeled);
    let initial_objective = objective.value(&field)?;

    let free: Vec<NodeId> = labeled.unlabeled().to_vec();
    let mut m = vec![0.0; n * l];
    let mut v = vec![0.0; n * l];
    let (b1, b2) = (config.adam_beta1, config.adam_beta2);
    let mut trace = Vec::with_capacity(config.epochs);
    for epoch in 1..=config.epochs {
        let (_, grad) = objective.value_and_gradient(&field)?;
        let bias1 = 1.0 - b1.powi(epoch as i32);
        let bias2 = 1.0 - b2.powi(epoch as i32);
        let mut norm_sq = 0.0;
        for &node in &free {
            let g = &grad[node * l..(node + 1) * l];
            let mean = g.iter().sum::<f64>() / l as f64;
            let row = field.row_mut(node);
            for i in 0..l {
                let gi = g[i] - mean;
                norm_sq += gi * gi;
                let idx = node * l + i;
                m[idx] = b1 * m[idx] + (1.0 - b1) * gi;
                v[idx] = b2 * v[idx] + (1.0 - b2) * gi * gi;
                let m_hat = m[idx] / bias1;
                let v_hat = v[idx] / bias2;
                row[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.adam_epsilon);
            }
            let projected = project_simplex(row);
            row.copy_from_slice(&projected);
        }
        field.clamp_labeled(labeled);
        trace.push(EpochRecord {
            epoch,
            objective: objective.value(&field)?,
            grad_norm: norm_sq.sqrt(),
        });
    }
    Ok(TrainOutcome {
        field,
        initial_objective,
        trace,
    })
}
