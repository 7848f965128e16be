//! Planted partition model generator and stratified prior sampling.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64`. The generator
//! draws exactly one `f64` per node pair, scanning pairs `(i, j)` with
//! `i < j` in lexicographic order, so a config maps to one graph on every
//! platform.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{Graph, LabeledSets};

#[derive(Debug, Clone, PartialEq)]
pub struct PpmConfig {
    pub community_sizes: Vec<usize>,
    /// Intra-community edge probability `p`.
    pub intra_prob: f64,
    /// Inter-community edge probability `q`.
    pub inter_prob: f64,
    pub seed: u64,
}

impl PpmConfig {
    pub fn new(community_sizes: Vec<usize>, intra_prob: f64, inter_prob: f64, seed: u64) -> Self {
        PpmConfig {
            community_sizes,
            intra_prob,
            inter_prob,
            seed,
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.community_sizes.iter().sum()
    }

    pub fn validate(&self) -> Result<()> {
        if self.community_sizes.is_empty() {
            return Err(Error::Config("no communities given".into()));
        }
        if self.community_sizes.contains(&0) {
            return Err(Error::Config("community sizes must be at least 1".into()));
        }
        let (p, q) = (self.intra_prob, self.inter_prob);
        if !(0.0..=1.0).contains(&p) || !(0.0..=1.0).contains(&q) {
            return Err(Error::Config(format!("probabilities out of [0,1]: p={p}, q={q}")));
        }
        if q > p {
            return Err(Error::Config(format!("requires q <= p, got p={p}, q={q}")));
        }
        Ok(())
    }
}

/// Community index of every node, communities laid out contiguously.
pub fn community_labels(sizes: &[usize]) -> Vec<usize> {
    sizes
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect()
}

pub fn generate_ppm(config: &PpmConfig) -> Result<Graph> {
    config.validate()?;
    let labels = community_labels(&config.community_sizes);
    let n = labels.len();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let prob = if labels[i] == labels[j] {
                config.intra_prob
            } else {
                config.inter_prob
            };
            let u: f64 = rng.random();
            if u < prob {
                edges.push((i, j));
            }
        }
    }
    Graph::from_edges(n, config.community_sizes.len(), edges, Some(labels))
}

/// Number of labeled nodes for prior ratio `ratio` on `num_nodes` nodes,
/// `floor(ratio * num_nodes)` with a small guard against binary rounding
/// (`0.29 * 100` must give 29).
pub fn prior_count(ratio: f64, num_nodes: usize) -> usize {
    (ratio * num_nodes as f64 + 1e-9).floor() as usize
}

/// Stratified prior: one uniformly chosen node per label, then uniform
/// sampling without replacement from the remaining nodes up to
/// `floor(ratio * N)` labeled nodes in total.
pub fn sample_prior(graph: &Graph, ratio: f64, seed: u64) -> Result<LabeledSets> {
    if !(ratio > 0.0 && ratio <= 1.0) {
        return Err(Error::Config(format!("prior ratio {ratio} outside (0,1]")));
    }
    let labels = graph
        .labels()
        .ok_or_else(|| Error::Config("graph has no ground-truth labels to sample".into()))?;
    let n = graph.num_nodes();
    let l = graph.num_labels();
    let total = prior_count(ratio, n);
    if total < l {
        return Err(Error::Config(format!(
            "prior ratio {ratio} gives {total} labeled nodes, fewer than the {l} labels"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut by_label = vec![Vec::new(); l];
    for (node, &lab) in labels.iter().enumerate() {
        by_label[lab].push(node);
    }
    let mut chosen = vec![false; n];
    for members in &by_label {
        let pick = members[rng.random_range(0..members.len())];
        chosen[pick] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| !chosen[v]).collect();
    for i in index::sample(&mut rng, rest.len(), total - l) {
        chosen[rest[i]] = true;
    }
    LabeledSets::new(
        n,
        l,
        (0..n).filter(|&v| chosen[v]).map(|v| (v, labels[v])),
    )
}

/// Independent stream seed from a base seed and a tuple of indices
/// (splitmix64 finalizer folded over the parts).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    parts.iter().fold(mix(base), |acc, &p| mix(acc ^ mix(p)))
}
