//! Clique sets: maximal cliques (pivoted Bron–Kerbosch), all cliques, edges,
//! and node participation statistics.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};

/// Default ceiling on the number of cliques `enumerate_all` may materialize.
pub const DEFAULT_CLIQUE_CEILING: usize = 50_000_000;

/// Deduplicated, lexicographically sorted collection of cliques, each stored
/// as an ascending node-id tuple.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CliqueSet {
    cliques: Vec<Vec<NodeId>>,
    by_size: BTreeMap<usize, Vec<usize>>,
}

impl CliqueSet {
    /// Normalizes tuple order, sorts and deduplicates. Does not check
    /// adjacency; see [`CliqueSet::validate`].
    pub fn from_cliques(cliques: impl IntoIterator<Item = Vec<NodeId>>) -> Self {
        let mut cliques: Vec<Vec<NodeId>> = cliques
            .into_iter()
            .map(|mut c| {
                c.sort_unstable();
                c
            })
            .collect();
        cliques.sort_unstable();
        cliques.dedup();
        Self::from_sorted(cliques)
    }

    fn from_sorted(cliques: Vec<Vec<NodeId>>) -> Self {
        let mut by_size: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (i, c) in cliques.iter().enumerate() {
            by_size.entry(c.len()).or_default().push(i);
        }
        CliqueSet { cliques, by_size }
    }

    pub fn len(&self) -> usize {
        self.cliques.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cliques.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &[NodeId]> + '_ {
        self.cliques.iter().map(Vec::as_slice)
    }

    pub fn as_slice(&self) -> &[Vec<NodeId>] {
        &self.cliques
    }

    /// Largest clique size present (0 for an empty set).
    pub fn max_size(&self) -> usize {
        self.by_size.keys().next_back().copied().unwrap_or(0)
    }

    /// Distinct clique sizes present, ascending.
    pub fn sizes(&self) -> impl Iterator<Item = usize> + '_ {
        self.by_size.keys().copied()
    }

    pub fn count_of_size(&self, k: usize) -> usize {
        self.by_size.get(&k).map_or(0, Vec::len)
    }

    pub fn of_size(&self, k: usize) -> impl Iterator<Item = &[NodeId]> + '_ {
        self.by_size
            .get(&k)
            .into_iter()
            .flatten()
            .map(move |&i| self.cliques[i].as_slice())
    }

    /// `clique` must be ascending.
    pub fn contains(&self, clique: &[NodeId]) -> bool {
        self.cliques
            .binary_search_by(|c| c.as_slice().cmp(clique))
            .is_ok()
    }

    /// Cliques of `self` not present in `other`.
    pub fn difference(&self, other: &CliqueSet) -> CliqueSet {
        Self::from_sorted(
            self.cliques
                .iter()
                .filter(|c| !other.contains(c))
                .cloned()
                .collect(),
        )
    }

    pub fn union(&self, other: &CliqueSet) -> CliqueSet {
        Self::from_cliques(self.cliques.iter().chain(&other.cliques).cloned())
    }

    /// Checks that every tuple is a clique of `graph` with at least two
    /// distinct in-range nodes.
    pub fn validate(&self, graph: &Graph) -> Result<()> {
        for c in &self.cliques {
            if c.len() < 2 {
                return Err(Error::Config(format!("clique {c:?} has fewer than 2 nodes")));
            }
            if let Some(&v) = c.iter().find(|&&v| v >= graph.num_nodes()) {
                return Err(Error::Dimension(format!(
                    "clique {c:?} references node {v} outside [0,{})",
                    graph.num_nodes()
                )));
            }
            for (i, &u) in c.iter().enumerate() {
                for &v in &c[i + 1..] {
                    if u == v || !graph.is_adjacent(u, v) {
                        return Err(Error::Config(format!(
                            "tuple {c:?} is not a clique ({u},{v})"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// One clique per line, space-separated ascending ids.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for c in &self.cliques {
            let mut first = true;
            for v in c {
                if !first {
                    out.push(' ');
                }
                first = false;
                let _ = write!(out, "{v}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cliques = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let c = line
                .split_whitespace()
                .map(|t| {
                    t.parse::<NodeId>()
                        .map_err(|_| Error::parse(i + 1, format!("invalid node id `{t}`")))
                })
                .collect::<Result<Vec<_>>>()?;
            cliques.push(c);
        }
        Ok(Self::from_cliques(cliques))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }

    /// Load a clique file and check it against `graph`.
    pub fn load(path: impl AsRef<Path>, graph: &Graph) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let set = Self::parse(&text)?;
        set.validate(graph)?;
        Ok(set)
    }
}

fn intersect(a: &[NodeId], b: &[NodeId]) -> Vec<NodeId> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

fn intersect_count(a: &[NodeId], b: &[NodeId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Degeneracy (smallest-last) ordering via bucket queue.
fn degeneracy_order(graph: &Graph) -> Vec<NodeId> {
    let n = graph.num_nodes();
    let mut degree: Vec<usize> = (0..n).map(|v| graph.degree(v)).collect();
    let max_deg = degree.iter().copied().max().unwrap_or(0);
    let mut buckets: Vec<Vec<NodeId>> = vec![Vec::new(); max_deg + 1];
    for v in (0..n).rev() {
        buckets[degree[v]].push(v);
    }
    let mut removed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let mut d = 0;
    while order.len() < n {
        // stale entries are skipped lazily
        let Some(v) = buckets[d].pop() else {
            d += 1;
            continue;
        };
        if removed[v] || degree[v] != d {
            continue;
        }
        removed[v] = true;
        order.push(v);
        for &u in graph.neighbors(v) {
            if !removed[u] {
                degree[u] -= 1;
                buckets[degree[u]].push(u);
                if degree[u] < d {
                    d = degree[u];
                }
            }
        }
    }
    order
}

fn bron_kerbosch_pivot(
    graph: &Graph,
    r: &mut Vec<NodeId>,
    mut p: Vec<NodeId>,
    mut x: Vec<NodeId>,
    out: &mut Vec<Vec<NodeId>>,
) {
    if p.is_empty() {
        if x.is_empty() && r.len() >= 2 {
            let mut c = r.clone();
            c.sort_unstable();
            out.push(c);
        }
        return;
    }
    // pivot: vertex of P ∪ X with the most neighbors in P
    let pivot = p
        .iter()
        .chain(&x)
        .copied()
        .max_by_key(|&u| (intersect_count(graph.neighbors(u), &p), std::cmp::Reverse(u)))
        .expect("P is nonempty");
    let pivot_nb = graph.neighbors(pivot);
    let branch: Vec<NodeId> = p
        .iter()
        .copied()
        .filter(|v| pivot_nb.binary_search(v).is_err())
        .collect();
    for v in branch {
        let nb = graph.neighbors(v);
        r.push(v);
        bron_kerbosch_pivot(graph, r, intersect(&p, nb), intersect(&x, nb), out);
        r.pop();
        if let Ok(i) = p.binary_search(&v) {
            p.remove(i);
        }
        if let Err(i) = x.binary_search(&v) {
            x.insert(i, v);
        }
    }
}

/// All maximal cliques with at least two nodes. Isolated vertices (maximal
/// cliques of size one) are left out; [`Graph::isolated_nodes`] lists them.
pub fn enumerate_maximal(graph: &Graph) -> CliqueSet {
    let order = degeneracy_order(graph);
    let mut position = vec![0; graph.num_nodes()];
    for (i, &v) in order.iter().enumerate() {
        position[v] = i;
    }
    let chunks: Vec<Vec<Vec<NodeId>>> = order
        .par_iter()
        .map(|&v| {
            let (mut p, mut x) = (Vec::new(), Vec::new());
            for &u in graph.neighbors(v) {
                if position[u] > position[v] {
                    p.push(u);
                } else {
                    x.push(u);
                }
            }
            let mut out = Vec::new();
            let mut r = vec![v];
            bron_kerbosch_pivot(graph, &mut r, p, x, &mut out);
            out
        })
        .collect();
    CliqueSet::from_cliques(chunks.into_iter().flatten())
}

/// All cliques of size `2..=min(M, k_cap)`, with the default memory ceiling.
pub fn enumerate_all(graph: &Graph, k_cap: Option<usize>) -> Result<CliqueSet> {
    enumerate_all_with_ceiling(graph, k_cap, DEFAULT_CLIQUE_CEILING)
}

/// All cliques of size `2..=min(M, k_cap)`; fails with a memory-guard error
/// once more than `ceiling` cliques have been produced.
///
/// Every clique is generated exactly once by extending with higher-numbered
/// common neighbors, and depth-first order is already lexicographic.
pub fn enumerate_all_with_ceiling(
    graph: &Graph,
    k_cap: Option<usize>,
    ceiling: usize,
) -> Result<CliqueSet> {
    if let Some(k) = k_cap {
        if k < 2 {
            return Err(Error::Config(format!("k_cap must be at least 2, got {k}")));
        }
    }
    let cap = k_cap.unwrap_or(usize::MAX);
    let mut out = Vec::new();
    let mut r = Vec::new();
    for v in 0..graph.num_nodes() {
        let nb = graph.neighbors(v);
        let start = nb.partition_point(|&u| u <= v);
        r.push(v);
        extend_all(graph, &mut r, &nb[start..], cap, ceiling, &mut out)?;
        r.pop();
    }
    debug_assert!(out.windows(2).all(|w| w[0] < w[1]));
    Ok(CliqueSet::from_sorted(out))
}

fn extend_all(
    graph: &Graph,
    r: &mut Vec<NodeId>,
    cand: &[NodeId],
    cap: usize,
    ceiling: usize,
    out: &mut Vec<Vec<NodeId>>,
) -> Result<()> {
    if r.len() >= cap {
        return Ok(());
    }
    for (i, &w) in cand.iter().enumerate() {
        r.push(w);
        if out.len() >= ceiling {
            return Err(Error::MemoryGuard(format!(
                "more than {ceiling} cliques; lower k_cap or raise the ceiling"
            )));
        }
        out.push(r.clone());
        let next = intersect(&cand[i + 1..], graph.neighbors(w));
        if !next.is_empty() {
            extend_all(graph, r, &next, cap, ceiling, out)?;
        }
        r.pop();
    }
    Ok(())
}

/// Every edge as a 2-clique.
pub fn pairwise_set(graph: &Graph) -> CliqueSet {
    CliqueSet::from_sorted(graph.edges().map(|(u, v)| vec![u, v]).collect())
}

/// Per-node clique membership counts and their dispersion.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticipationStats {
    pub frequency: Vec<u64>,
    pub mean: f64,
    pub centered: Vec<f64>,
    pub variance: f64,
}

impl ParticipationStats {
    pub fn from_frequency(frequency: Vec<u64>) -> Self {
        let n = frequency.len();
        if n == 0 {
            return ParticipationStats {
                frequency,
                mean: 0.0,
                centered: Vec::new(),
                variance: 0.0,
            };
        }
        let total: u64 = frequency.iter().sum();
        let mean = total as f64 / n as f64;
        let centered: Vec<f64> = frequency.iter().map(|&g| g as f64 - mean).collect();
        // exact integer form of (1/N) Σ (γ_i - Γ)^2 = (N Σγ² - (Σγ)²) / N²
        let sq: u128 = frequency.iter().map(|&g| (g as u128) * (g as u128)).sum();
        let num = n as u128 * sq - (total as u128) * (total as u128);
        let variance = num as f64 / (n as f64 * n as f64);
        ParticipationStats {
            frequency,
            mean,
            centered,
            variance,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }

    pub fn num_nodes(&self) -> usize {
        self.frequency.len()
    }
}

pub fn participation(set: &CliqueSet, num_nodes: usize) -> Result<ParticipationStats> {
    let mut freq = vec![0u64; num_nodes];
    for c in set.iter() {
        for &v in c {
            if v >= num_nodes {
                return Err(Error::Dimension(format!(
                    "clique node {v} outside [0,{num_nodes})"
                )));
            }
            freq[v] += 1;
        }
    }
    Ok(ParticipationStats::from_frequency(freq))
}
