//! Expected numbers of k-cliques and maximal k-cliques in the planted
//! partition model, and a Monte-Carlo estimator to check them against.
//!
//! A k-clique's label composition is an integer partition `η` of `k`. For
//! each composition the sum runs over ordered assignments `ξ` of distinct
//! communities to the parts of `η`:
//!
//! ```text
//! E[K_k] = Σ_η P(η)/m(η)! · Σ_ξ A(η,ξ)
//! E[Q_k] = Σ_η P(η)/m(η)! · Σ_ξ A(η,ξ) B1(η,ξ) B2(η,ξ)
//! ```
//!
//! `m(η)!` is the product of factorials of the multiplicities of equal part
//! values, which removes the ordering among equal-sized parts.

use rayon::prelude::*;
use serde::Serialize;

use crate::clique::{enumerate_all, enumerate_maximal};
use crate::error::{Error, Result};
use crate::ppm::{derive_seed, generate_ppm, PpmConfig};

/// Integer partition with parts in non-decreasing order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    parts: Vec<usize>,
}

impl Partition {
    pub fn new(mut parts: Vec<usize>) -> Result<Self> {
        if parts.contains(&0) {
            return Err(Error::Config("partition parts must be positive".into()));
        }
        parts.sort_unstable();
        Ok(Partition { parts })
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    /// `η_+`
    pub fn total(&self) -> usize {
        self.parts.iter().sum()
    }

    /// `|η|`
    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// `(value, count)` pairs in increasing value order.
    pub fn multiplicities(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = Vec::new();
        for &p in &self.parts {
            match out.last_mut() {
                Some((v, c)) if *v == p => *c += 1,
                _ => out.push((p, 1)),
            }
        }
        out
    }
}

/// All partitions of `k` in lexicographic order of their sorted parts.
pub fn integer_partitions(k: usize) -> Vec<Partition> {
    fn rec(rest: usize, min: usize, cur: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if rest == 0 {
            out.push(Partition { parts: cur.clone() });
            return;
        }
        for p in min..=rest {
            // remaining must be 0 or at least p to stay non-decreasing
            if rest - p != 0 && rest - p < p {
                continue;
            }
            cur.push(p);
            rec(rest - p, p, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if k > 0 {
        rec(k, 1, &mut Vec::new(), &mut out);
    }
    out
}

/// Divisor applied to each composition's ordered sum.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Normalization {
    /// `m(η)!`, product of factorials of part multiplicities.
    #[default]
    Multiplicity,
    /// `η_1! ··· η_|η|!`, the literal factorial of the parts. Kept for
    /// comparison; it does not reproduce the small two-community cases.
    PartFactorial,
}

impl std::str::FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiplicity" => Ok(Normalization::Multiplicity),
            "part-factorial" => Ok(Normalization::PartFactorial),
            other => Err(Error::Config(format!(
                "unknown normalization `{other}` (expected multiplicity|part-factorial)"
            ))),
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        match acc.checked_mul((n - i) as u128) {
            Some(v) => acc = v / (i as u128 + 1),
            None => {
                let mut f = 1.0f64;
                for j in 0..k {
                    f *= (n - j) as f64 / (j + 1) as f64;
                }
                return f.round();
            }
        }
    }
    acc as f64
}

fn choose2(n: usize) -> i32 {
    (n * n.saturating_sub(1) / 2) as i32
}

fn validate(sizes: &[usize], p: f64, q: f64) -> Result<()> {
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::Config("community sizes must be positive".into()));
    }
    for (name, v) in [("p", p), ("q", q)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Error::Config(format!("{name} = {v} outside [0,1]")));
        }
    }
    Ok(())
}

/// Neumaier-compensated sum of non-negative terms, largest first.
fn compensated_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_unstable_by(|a, b| b.abs().total_cmp(&a.abs()));
    let mut sum = 0.0;
    let mut c = 0.0;
    for t in terms {
        let s = sum + t;
        if sum.abs() >= t.abs() {
            c += (sum - s) + t;
        } else {
            c += (t - s) + sum;
        }
        sum = s;
    }
    sum + c
}

/// `Σ_{ξ ∈ S(l,|η|)} Π_m f(m, ξ_m) · Π_{i ∉ ξ} g(i)` by a dynamic program
/// over communities and the subset of parts already assigned.
fn ordered_selection_sum(
    num_parts: usize,
    num_labels: usize,
    f: impl Fn(usize, usize) -> f64,
    g: impl Fn(usize) -> f64,
) -> f64 {
    if num_parts > num_labels {
        return 0.0;
    }
    let full = 1usize << num_parts;
    let mut dp = vec![0.0f64; full];
    dp[0] = 1.0;
    for i in 0..num_labels {
        let gi = g(i);
        let mut next = vec![0.0f64; full];
        for (mask, &val) in dp.iter().enumerate() {
            if val == 0.0 {
                continue;
            }
            next[mask] += val * gi;
            for m in 0..num_parts {
                if mask & (1 << m) == 0 {
                    next[mask | (1 << m)] += val * f(m, i);
                }
            }
        }
        dp = next;
    }
    dp[full - 1]
}

fn composition_terms(sizes: &[usize], p: f64, q: f64, k: usize, maximal: bool, norm: Normalization) -> Vec<f64> {
    let l = sizes.len();
    integer_partitions(k)
        .into_iter()
        .filter(|eta| eta.len() <= l)
        .map(|eta| {
            let parts = eta.parts();
            let same: i32 = parts.iter().map(|&e| choose2(e)).sum();
            let prob = p.powi(same) * q.powi(choose2(k) - same);
            if prob == 0.0 {
                return 0.0;
            }
            let divisor = match norm {
                Normalization::Multiplicity => eta.multiplicities().iter().map(|&(_, c)| factorial(c)).product(),
                Normalization::PartFactorial => parts.iter().map(|&e| factorial(e)).product::<f64>(),
            };
            let assigned = |m: usize, i: usize| {
                let (e, n_i) = (parts[m], sizes[i]);
                if e > n_i {
                    return 0.0;
                }
                let a = binomial(n_i, e);
                if maximal {
                    let outside = 1.0 - p.powi(e as i32) * q.powi((k - e) as i32);
                    a * outside.powi((n_i - e) as i32)
                } else {
                    a
                }
            };
            let unused = |i: usize| {
                if maximal {
                    (1.0 - q.powi(k as i32)).powi(sizes[i] as i32)
                } else {
                    1.0
                }
            };
            prob * ordered_selection_sum(parts.len(), l, assigned, unused) / divisor
        })
        .collect()
}

/// `E[K_k]`, the expected number of k-cliques.
pub fn expected_k_cliques(sizes: &[usize], p: f64, q: f64, k: usize, norm: Normalization) -> Result<f64> {
    validate(sizes, p, q)?;
    if k < 2 {
        return Err(Error::Config(format!("clique size k = {k} must be at least 2")));
    }
    if k > sizes.iter().sum() {
        return Ok(0.0);
    }
    Ok(compensated_sum(composition_terms(sizes, p, q, k, false, norm)))
}

/// `E[Q_k]`, the expected number of maximal k-cliques.
pub fn expected_maximal_k_cliques(sizes: &[usize], p: f64, q: f64, k: usize, norm: Normalization) -> Result<f64> {
    validate(sizes, p, q)?;
    if k < 2 {
        return Err(Error::Config(format!("clique size k = {k} must be at least 2")));
    }
    if k > sizes.iter().sum() {
        return Ok(0.0);
    }
    Ok(compensated_sum(composition_terms(sizes, p, q, k, true, norm)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedRow {
    pub k: usize,
    pub cliques: f64,
    pub maximal: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectedCounts {
    pub rows: Vec<ExpectedRow>,
    pub total_cliques: f64,
    pub total_maximal: f64,
}

impl ExpectedCounts {
    /// `E[K] / E[Q]`, infinite when no maximal cliques are expected.
    pub fn ratio(&self) -> f64 {
        self.total_cliques / self.total_maximal
    }
}

/// Per-k expectations for `k = 2..=kmax` (capped at the node count).
pub fn expected_counts(sizes: &[usize], p: f64, q: f64, kmax: usize, norm: Normalization) -> Result<ExpectedCounts> {
    validate(sizes, p, q)?;
    let kmax = kmax.min(sizes.iter().sum());
    let rows = (2..=kmax)
        .into_par_iter()
        .map(|k| {
            Ok(ExpectedRow {
                k,
                cliques: expected_k_cliques(sizes, p, q, k, norm)?,
                maximal: expected_maximal_k_cliques(sizes, p, q, k, norm)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let total_cliques = compensated_sum(rows.iter().map(|r| r.cliques).collect());
    let total_maximal = compensated_sum(rows.iter().map(|r| r.maximal).collect());
    Ok(ExpectedCounts {
        rows,
        total_cliques,
        total_maximal,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloRow {
    pub k: usize,
    pub cliques_mean: f64,
    pub cliques_se: f64,
    pub maximal_mean: f64,
    pub maximal_se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloCounts {
    pub trials: usize,
    pub rows: Vec<MonteCarloRow>,
}

impl MonteCarloCounts {
    pub fn row(&self, k: usize) -> Option<&MonteCarloRow> {
        self.rows.iter().find(|r| r.k == k)
    }
}

fn mean_se(samples: impl Iterator<Item = f64> + Clone, n: usize) -> (f64, f64) {
    let mean = samples.clone().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = samples.map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Sample means and standard errors of `|K_k|` and `|Q_k|` for
/// `k = 2..=kmax` over `trials` independent PPM draws.
pub fn monte_carlo_counts(sizes: &[usize], p: f64, q: f64, kmax: usize, trials: usize, seed: u64) -> Result<MonteCarloCounts> {
    validate(sizes, p, q)?;
    if trials == 0 {
        return Err(Error::Config("at least one Monte-Carlo trial is required".into()));
    }
    let kmax = kmax.min(sizes.iter().sum()).max(2);
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let cfg = PpmConfig::new(sizes.to_vec(), p, q, derive_seed(seed, &[t as u64]));
            let g = generate_ppm(&cfg)?;
            let all = enumerate_all(&g, Some(kmax))?;
            let max = enumerate_maximal(&g);
            Ok((2..=kmax)
                .map(|k| (all.count_of_size(k) as f64, max.count_of_size(k) as f64))
                .collect::<Vec<_>>())
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = (2..=kmax)
        .enumerate()
        .map(|(i, k)| {
            let (cliques_mean, cliques_se) = mean_se(counts.iter().map(|c| c[i].0), trials);
            let (maximal_mean, maximal_se) = mean_se(counts.iter().map(|c| c[i].1), trials);
            MonteCarloRow {
                k,
                cliques_mean,
                cliques_se,
                maximal_mean,
                maximal_se,
            }
        })
        .collect();
    Ok(MonteCarloCounts { trials, rows })
}
