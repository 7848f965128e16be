//! Greedy augmentation of the maximal clique set with non-maximal cliques
//! that flatten node participation.
//!
//! Adding a `k`-clique `ψ` to a set whose participation counts are `γ`
//! (mean `Γ`, centered `ξ = γ - Γ`) changes the participation variance by
//!
//! ```text
//! Δ = (1/N) · (2 Σ_{i∈ψ} ξ_i + k(N-k)/N)
//! ```
//!
//! Multiplying by `N²` and writing `T = Σ γ` gives an integer,
//! `N²Δ = 2(N Σ_{i∈ψ} γ_i - kT) + k(N-k)`, which the greedy loop uses for
//! exact comparisons and the exact stopping rule `Δ >= 0`.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::clique::{participation, CliqueSet, ParticipationStats};
use crate::error::{Error, Result};
use crate::graph::NodeId;

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AugmentationConfig {
    /// Maximum number of non-maximal cliques to add; `None` runs until no
    /// candidate lowers the variance.
    pub budget: Option<usize>,
    /// Ignore candidates larger than this.
    pub candidate_cap: Option<usize>,
}

impl AugmentationConfig {
    pub fn with_budget(budget: usize) -> Self {
        AugmentationConfig {
            budget: Some(budget),
            candidate_cap: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Augmentation {
    /// Maximal cliques plus the selected ones.
    pub set: CliqueSet,
    /// Selected cliques in selection order.
    pub added: Vec<Vec<NodeId>>,
    /// Participation variance before any addition, then after each one.
    pub variance_trace: Vec<f64>,
    /// Participation of the final set.
    pub stats: ParticipationStats,
}

#[derive(Debug, Clone, Serialize)]
pub struct AugmentationReport {
    pub additions: usize,
    pub variance_trace: Vec<f64>,
    pub initial_mean: f64,
    pub initial_std: f64,
    pub final_mean: f64,
    pub final_std: f64,
    pub final_min: u64,
    pub final_max: u64,
    pub clique_count: usize,
}

impl Augmentation {
    pub fn report(&self) -> AugmentationReport {
        let n = self.stats.num_nodes().max(1) as f64;
        let initial_total = self.stats.frequency.iter().sum::<u64>() as f64
            - self.added.iter().map(|c| c.len() as f64).sum::<f64>();
        AugmentationReport {
            additions: self.added.len(),
            variance_trace: self.variance_trace.clone(),
            initial_mean: initial_total / n,
            initial_std: self.variance_trace[0].max(0.0).sqrt(),
            final_mean: self.stats.mean,
            final_std: self.stats.std_dev(),
            final_min: self.stats.frequency.iter().copied().min().unwrap_or(0),
            final_max: self.stats.frequency.iter().copied().max().unwrap_or(0),
            clique_count: self.set.len(),
        }
    }
}

fn scaled_delta(n: i128, k: i128, total: i128, sum_gamma: i128) -> i128 {
    2 * (n * sum_gamma - k * total) + k * (n - k)
}

/// Exact change in participation variance if `candidate` were added.
pub fn variance_delta(
    stats: &ParticipationStats,
    candidate: &[NodeId],
    num_nodes: usize,
) -> Result<f64> {
    if stats.num_nodes() != num_nodes {
        return Err(Error::Dimension(format!(
            "stats cover {} nodes, expected {num_nodes}",
            stats.num_nodes()
        )));
    }
    if candidate.len() < 2 {
        return Err(Error::Precondition(format!(
            "candidate {candidate:?} has fewer than 2 nodes"
        )));
    }
    if let Some(&v) = candidate.iter().find(|&&v| v >= num_nodes) {
        return Err(Error::Dimension(format!(
            "candidate node {v} outside [0,{num_nodes})"
        )));
    }
    let total: u64 = stats.frequency.iter().sum();
    let sum_gamma: u64 = candidate.iter().map(|&v| stats.frequency[v]).sum();
    let n = num_nodes as i128;
    let scaled = scaled_delta(n, candidate.len() as i128, total as i128, sum_gamma as i128);
    Ok(scaled as f64 / (n * n) as f64)
}

/// Greedy variance-reducing augmentation.
///
/// Each step adds the candidate with the most negative `Δ`, ties going to
/// the smaller clique and then to lexicographic order, and stops when the
/// budget is spent, the pool is empty, or no candidate has `Δ < 0`.
/// Candidates already in `maximal` are dropped from the pool.
pub fn build_augmax(
    maximal: &CliqueSet,
    candidates: &CliqueSet,
    config: &AugmentationConfig,
    num_nodes: usize,
) -> Result<Augmentation> {
    let mut stats = participation(maximal, num_nodes)?;
    let pool: Vec<&[NodeId]> = candidates
        .iter()
        .filter(|c| c.len() >= 2)
        .filter(|c| config.candidate_cap.is_none_or(|cap| c.len() <= cap))
        .filter(|c| !maximal.contains(c))
        .collect();
    if let Some(&v) = pool.iter().flat_map(|c| c.iter()).find(|&&v| v >= num_nodes) {
        return Err(Error::Dimension(format!(
            "candidate node {v} outside [0,{num_nodes})"
        )));
    }

    let mut gamma = stats.frequency.clone();
    let mut total: u64 = gamma.iter().sum();
    let mut variance = stats.variance;
    let mut trace = vec![variance];
    let mut added = Vec::new();

    // Within one size class the ranking depends only on Σ_{i∈ψ} γ_i, so each
    // class keeps its candidates ordered by (Σγ, pool index); pool index
    // order is lexicographic order.
    let max_k = pool.iter().map(|c| c.len()).max().unwrap_or(0);
    let mut classes: Vec<BTreeSet<(u64, usize)>> = vec![BTreeSet::new(); max_k + 1];
    let mut sums: Vec<u64> = Vec::with_capacity(pool.len());
    let mut by_node: Vec<Vec<usize>> = vec![Vec::new(); num_nodes];
    for (idx, c) in pool.iter().enumerate() {
        let s: u64 = c.iter().map(|&v| gamma[v]).sum();
        sums.push(s);
        classes[c.len()].insert((s, idx));
        for &v in c.iter() {
            by_node[v].push(idx);
        }
    }
    let mut alive = vec![true; pool.len()];

    let n = num_nodes as i128;
    let budget = config.budget.unwrap_or(usize::MAX);
    while added.len() < budget {
        let mut best: Option<(i128, usize, usize)> = None;
        for (k, class) in classes.iter().enumerate() {
            let Some(&(s, idx)) = class.first() else {
                continue;
            };
            let d = scaled_delta(n, k as i128, total as i128, s as i128);
            // strict comparison keeps the smaller k on ties
            if best.is_none_or(|(bd, _, _)| d < bd) {
                best = Some((d, k, idx));
            }
        }
        let Some((d, k, idx)) = best else { break };
        if d >= 0 {
            break;
        }
        let chosen = pool[idx];
        classes[k].remove(&(sums[idx], idx));
        alive[idx] = false;
        for &v in chosen {
            gamma[v] += 1;
            for &other in &by_node[v] {
                if !alive[other] {
                    continue;
                }
                let class = &mut classes[pool[other].len()];
                class.remove(&(sums[other], other));
                sums[other] += 1;
                class.insert((sums[other], other));
            }
        }
        total += k as u64;
        variance += d as f64 / (n * n) as f64;
        trace.push(variance);
        added.push(chosen.to_vec());
    }

    let set = maximal.union(&CliqueSet::from_cliques(added.iter().cloned()));
    stats = ParticipationStats::from_frequency(gamma);
    Ok(Augmentation {
        set,
        added,
        variance_trace: trace,
        stats,
    })
}
