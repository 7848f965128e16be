//! End-to-end experiments: generate a planted-partition graph, sample a
//! prior, pick a clique set, initialize by random walks, train, classify.
//!
//! All strategies in one cell and replication share the graph, the prior and
//! the random-walk initialization, so accuracy gains isolate the effect of
//! the clique set.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::augmax::{build_augmax, AugmentationConfig};
use crate::clique::{enumerate_all, enumerate_maximal, pairwise_set, participation, CliqueSet};
use crate::error::{Error, Result};
use crate::field::{classify, ProbabilityField};
use crate::graph::{Graph, LabeledSets, NodeId};
use crate::objective::{train, EpochRecord, TrainConfig, WeightMode};
use crate::ppm::{derive_seed, generate_ppm, sample_prior, PpmConfig};
use crate::rw::{solve_dirichlet, DEFAULT_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Strategy {
    /// Edges only.
    Pi,
    /// Every clique of size two or more.
    All,
    /// Maximal cliques.
    Max,
    /// Maximal cliques plus greedily added non-maximal ones.
    AugMax,
}

impl Strategy {
    pub const ALL_STRATEGIES: [Strategy; 4] = [Strategy::Pi, Strategy::All, Strategy::Max, Strategy::AugMax];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Pi => "PI",
            Strategy::All => "ALL",
            Strategy::Max => "MAX",
            Strategy::AugMax => "AUGMAX",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().replace('-', "").as_str() {
            "PI" => Ok(Strategy::Pi),
            "ALL" => Ok(Strategy::All),
            "MAX" => Ok(Strategy::Max),
            "AUGMAX" => Ok(Strategy::AugMax),
            _ => Err(Error::Config(format!(
                "unknown strategy `{s}` (expected PI|ALL|MAX|AUGMAX)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum EvalScope {
    #[default]
    Unlabeled,
    AllNodes,
}

impl FromStr for EvalScope {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unlabeled" | "unlabeled-only" => Ok(EvalScope::Unlabeled),
            "all" | "all-nodes" => Ok(EvalScope::AllNodes),
            _ => Err(Error::Config(format!(
                "unknown eval scope `{s}` (expected unlabeled|all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub ppm: PpmConfig,
    pub prior_ratio: f64,
    pub strategy: Strategy,
    pub augment: AugmentationConfig,
    pub train: TrainConfig,
    pub replications: usize,
    pub eval_scope: EvalScope,
    /// Largest clique size enumerated for ALL and as Aug-MAX candidates.
    pub k_cap: Option<usize>,
    pub rw_tol: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            ppm: PpmConfig::new(vec![100; 5], 0.05, 0.005, 0),
            prior_ratio: 0.05,
            strategy: Strategy::AugMax,
            augment: AugmentationConfig::default(),
            train: TrainConfig::default(),
            replications: 1,
            eval_scope: EvalScope::Unlabeled,
            k_cap: None,
            rw_tol: DEFAULT_TOL,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("invalid value `{value}` for `{key}`")))
}

fn parse_list<T: FromStr>(key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| parse_value(key, t))
        .collect()
}

/// Parse a flat `key = value` file. `#` starts a comment.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got `{line}`")))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

impl ExperimentConfig {
    /// Apply `key = value` settings over `self`. Unknown keys are errors.
    ///
    /// Keys: `sizes`, `p`, `q`, `seed`, `r`, `strategy`, `budget`,
    /// `candidate_cap`, `k_cap`, `lr`, `epochs`, `beta1`, `beta2`, `eps`,
    /// `weights` (uniform|linear), `w<k>` per-size weight, `replications`,
    /// `eval_scope`, `tol`.
    pub fn apply(&mut self, settings: &BTreeMap<String, String>) -> Result<()> {
        for (key, value) in settings {
            let v = value.as_str();
            match key.as_str() {
                "sizes" => self.ppm.community_sizes = parse_list(key, v)?,
                "p" => self.ppm.intra_prob = parse_value(key, v)?,
                "q" => self.ppm.inter_prob = parse_value(key, v)?,
                "seed" => {
                    self.ppm.seed = parse_value(key, v)?;
                    self.train.seed = self.ppm.seed;
                }
                "r" | "prior_ratio" => self.prior_ratio = parse_value(key, v)?,
                "strategy" => self.strategy = v.parse()?,
                "budget" => self.augment.budget = parse_optional(key, v)?,
                "candidate_cap" => self.augment.candidate_cap = parse_optional(key, v)?,
                "k_cap" => self.k_cap = parse_optional(key, v)?,
                "lr" | "learning_rate" => self.train.learning_rate = parse_value(key, v)?,
                "epochs" => self.train.epochs = parse_value(key, v)?,
                "beta1" => self.train.adam_beta1 = parse_value(key, v)?,
                "beta2" => self.train.adam_beta2 = parse_value(key, v)?,
                "eps" | "epsilon" => self.train.adam_epsilon = parse_value(key, v)?,
                "weights" => self.train.weights.mode = v.parse::<WeightMode>()?,
                "replications" => self.replications = parse_value(key, v)?,
                "eval_scope" => self.eval_scope = v.parse()?,
                "tol" => self.rw_tol = parse_value(key, v)?,
                other => match other.strip_prefix('w').map(str::parse::<usize>) {
                    Some(Ok(k)) => {
                        self.train.weights.overrides.insert(k, parse_value(key, v)?);
                    }
                    _ => return Err(Error::Config(format!("unknown config key `{other}`"))),
                },
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        self.ppm.validate()?;
        self.train.validate()?;
        if self.replications == 0 {
            return Err(Error::Config("replications must be at least 1".into()));
        }
        if !(self.prior_ratio > 0.0 && self.prior_ratio <= 1.0) {
            return Err(Error::Config(format!("prior ratio {} outside (0,1]", self.prior_ratio)));
        }
        if self.k_cap.is_some_and(|k| k < 2) {
            return Err(Error::Config("k_cap must be at least 2".into()));
        }
        if !(self.rw_tol > 0.0) {
            return Err(Error::Config("solver tolerance must be positive".into()));
        }
        Ok(())
    }
}

fn parse_optional(key: &str, value: &str) -> Result<Option<usize>> {
    match value.trim() {
        "" | "none" | "unlimited" => Ok(None),
        v => parse_value(key, v).map(Some),
    }
}

/// Fraction of `scope` nodes whose prediction matches the truth.
pub fn accuracy(predicted: &[usize], truth: &[usize], scope: &[NodeId]) -> Result<f64> {
    if scope.is_empty() {
        return Err(Error::Config("accuracy scope is empty".into()));
    }
    if predicted.len() != truth.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} nodes",
            predicted.len(),
            truth.len()
        )));
    }
    let mut hits = 0usize;
    for &v in scope {
        if v >= truth.len() {
            return Err(Error::Dimension(format!("scope node {v} out of range")));
        }
        hits += usize::from(predicted[v] == truth[v]);
    }
    Ok(hits as f64 / scope.len() as f64)
}

/// Wall-clock time per stage in milliseconds. Not part of report equality.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Timings {
    pub cliques_ms: f64,
    pub train_ms: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub strategy: Strategy,
    pub seed: u64,
    pub accuracy: f64,
    /// Accuracy of the random-walk initialization alone.
    pub init_accuracy: f64,
    pub gain_vs_pi: f64,
    pub clique_count: usize,
    pub freq_mean: f64,
    pub freq_std: f64,
    pub augment_additions: Option<usize>,
    pub epochs: usize,
    pub objective_initial: f64,
    pub objective_final: f64,
    pub trace: Vec<EpochRecord>,
    pub timings: Timings,
}

impl PartialEq for RunReport {
    fn eq(&self, o: &Self) -> bool {
        self.strategy == o.strategy
            && self.seed == o.seed
            && self.accuracy.to_bits() == o.accuracy.to_bits()
            && self.init_accuracy.to_bits() == o.init_accuracy.to_bits()
            && self.gain_vs_pi.to_bits() == o.gain_vs_pi.to_bits()
            && self.clique_count == o.clique_count
            && self.freq_mean.to_bits() == o.freq_mean.to_bits()
            && self.freq_std.to_bits() == o.freq_std.to_bits()
            && self.augment_additions == o.augment_additions
            && self.epochs == o.epochs
            && self.objective_initial.to_bits() == o.objective_initial.to_bits()
            && self.objective_final.to_bits() == o.objective_final.to_bits()
            && self.trace == o.trace
    }
}

impl Serialize for Strategy {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl Serialize for EvalScope {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(match self {
            EvalScope::Unlabeled => "unlabeled",
            EvalScope::AllNodes => "all",
        })
    }
}

/// Graph, prior and initialization shared by every strategy of a cell.
#[derive(Debug, Clone)]
pub struct PreparedCell {
    pub graph: Graph,
    pub labeled: LabeledSets,
    pub init: ProbabilityField,
    pub seed: u64,
}

impl PreparedCell {
    pub fn new(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        let ppm = PpmConfig {
            seed,
            ..config.ppm.clone()
        };
        let graph = generate_ppm(&ppm).map_err(|e| e.in_stage("generate"))?;
        let labeled = sample_prior(&graph, config.prior_ratio, derive_seed(seed, &[1]))
            .map_err(|e| e.in_stage("prior"))?;
        let init = solve_dirichlet(&graph, &labeled, config.rw_tol).map_err(|e| e.in_stage("init"))?;
        Ok(PreparedCell {
            graph,
            labeled,
            init,
            seed,
        })
    }

    fn truth(&self) -> &[usize] {
        self.graph.labels().expect("generated graphs carry labels")
    }

    fn scope(&self, eval: EvalScope) -> Vec<NodeId> {
        match eval {
            EvalScope::Unlabeled => self.labeled.unlabeled().to_vec(),
            EvalScope::AllNodes => (0..self.graph.num_nodes()).collect(),
        }
    }
}

/// Clique sets for each strategy, computed lazily and shared.
pub struct CliqueSets<'g> {
    graph: &'g Graph,
    k_cap: Option<usize>,
    augment: AugmentationConfig,
    maximal: Option<CliqueSet>,
    all: Option<CliqueSet>,
}

impl<'g> CliqueSets<'g> {
    pub fn new(graph: &'g Graph, k_cap: Option<usize>, augment: AugmentationConfig) -> Self {
        CliqueSets {
            graph,
            k_cap,
            augment,
            maximal: None,
            all: None,
        }
    }

    fn maximal(&mut self) -> &CliqueSet {
        let g = self.graph;
        self.maximal.get_or_insert_with(|| enumerate_maximal(g))
    }

    fn all(&mut self) -> Result<&CliqueSet> {
        if self.all.is_none() {
            self.all = Some(enumerate_all(self.graph, self.k_cap)?);
        }
        Ok(self.all.as_ref().expect("just filled"))
    }

    /// The strategy's training set and, for Aug-MAX, the number of additions.
    pub fn get(&mut self, strategy: Strategy) -> Result<(CliqueSet, Option<usize>)> {
        match strategy {
            Strategy::Pi => Ok((pairwise_set(self.graph), None)),
            Strategy::All => Ok((self.all().map_err(|e| e.in_stage("cliques"))?.clone(), None)),
            Strategy::Max => Ok((self.maximal().clone(), None)),
            Strategy::AugMax => {
                self.all().map_err(|e| e.in_stage("cliques"))?;
                let n = self.graph.num_nodes();
                let maximal = self.maximal.get_or_insert_with(|| enumerate_maximal(self.graph));
                let all = self.all.as_ref().expect("filled above");
                let aug = build_augmax(maximal, all, &self.augment, n).map_err(|e| e.in_stage("augmax"))?;
                let added = aug.added.len();
                Ok((aug.set, Some(added)))
            }
        }
    }
}

/// Run several strategies on one prepared cell. PI is always trained first
/// as the gain baseline, and reported only if requested.
pub fn run_cell(config: &ExperimentConfig, cell: &PreparedCell, strategies: &[Strategy]) -> Result<Vec<RunReport>> {
    let mut sets = CliqueSets::new(&cell.graph, config.k_cap, config.augment.clone());
    let scope = cell.scope(config.eval_scope);
    let init_accuracy = accuracy(&classify(&cell.init), cell.truth(), &scope)?;
    let n = cell.graph.num_nodes();

    let mut run_one = |strategy: Strategy, pi_accuracy: Option<f64>| -> Result<RunReport> {
        let started = Instant::now();
        let (set, augment_additions) = sets.get(strategy)?;
        let cliques_ms = started.elapsed().as_secs_f64() * 1e3;
        let stats = participation(&set, n).map_err(|e| e.in_stage("cliques"))?;
        let started = Instant::now();
        let outcome = train(&cell.graph, &set, &cell.init, &cell.labeled, &config.train)
            .map_err(|e| e.in_stage("train"))?;
        let train_ms = started.elapsed().as_secs_f64() * 1e3;
        let acc = accuracy(&classify(&outcome.field), cell.truth(), &scope)?;
        Ok(RunReport {
            strategy,
            seed: cell.seed,
            accuracy: acc,
            init_accuracy,
            gain_vs_pi: acc / pi_accuracy.unwrap_or(acc) - 1.0,
            clique_count: set.len(),
            freq_mean: stats.mean,
            freq_std: stats.std_dev(),
            augment_additions,
            epochs: config.train.epochs,
            objective_initial: outcome.initial_objective,
            objective_final: outcome.final_objective(),
            trace: outcome.trace,
            timings: Timings { cliques_ms, train_ms },
        })
    };

    let pi = run_one(Strategy::Pi, None)?;
    let mut out = Vec::with_capacity(strategies.len());
    for &s in strategies {
        if s == Strategy::Pi {
            out.push(pi.clone());
        } else {
            out.push(run_one(s, Some(pi.accuracy))?);
        }
    }
    Ok(out)
}

/// One run of `config.strategy` with seed `config.ppm.seed`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunReport> {
    config.validate()?;
    let cell = PreparedCell::new(config, config.ppm.seed)?;
    Ok(run_cell(config, &cell, &[config.strategy])?.remove(0))
}

/// `config.replications` independent runs; replication `i` uses
/// `derive_seed(seed, [0, 0, 0, i])`, matching a single-cell sweep.
pub fn run_replications(config: &ExperimentConfig) -> Result<Vec<RunReport>> {
    config.validate()?;
    (0..config.replications)
        .into_par_iter()
        .map(|rep| {
            let seed = derive_seed(config.ppm.seed, &[0, 0, 0, rep as u64]);
            let cell = PreparedCell::new(config, seed)?;
            Ok(run_cell(config, &cell, &[config.strategy])?.remove(0))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepGrid {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
    pub r: Vec<f64>,
}

impl SweepGrid {
    pub fn validate(&self) -> Result<()> {
        if self.p.is_empty() || self.q.is_empty() || self.r.is_empty() {
            return Err(Error::Config("sweep grid has an empty axis".into()));
        }
        Ok(())
    }

    /// `start, start+step, ..., stop` inclusive, rounded to 12 decimals.
    pub fn range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
        if !(step > 0.0) || stop < start {
            return Err(Error::Config(format!("bad range {start}:{stop}:{step}")));
        }
        let n = ((stop - start) / step + 1e-9).floor() as usize;
        Ok((0..=n)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect())
    }
}

/// One line of the results table. Aggregate lines carry `status` `mean` or
/// `std` and no seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub strategy: String,
    pub seed: Option<u64>,
    pub accuracy: Option<f64>,
    pub gain_vs_pi: Option<f64>,
    pub clique_count: Option<f64>,
    pub freq_mean: Option<f64>,
    pub freq_std: Option<f64>,
    pub epochs: Option<usize>,
    pub objective_final: Option<f64>,
    pub status: String,
}

impl SweepRow {
    fn from_report(p: f64, q: f64, r: f64, rep: &RunReport) -> Self {
        SweepRow {
            p,
            q,
            r,
            strategy: rep.strategy.to_string(),
            seed: Some(rep.seed),
            accuracy: Some(rep.accuracy),
            gain_vs_pi: Some(rep.gain_vs_pi),
            clique_count: Some(rep.clique_count as f64),
            freq_mean: Some(rep.freq_mean),
            freq_std: Some(rep.freq_std),
            epochs: Some(rep.epochs),
            objective_final: Some(rep.objective_final),
            status: "ok".into(),
        }
    }

    fn failed(p: f64, q: f64, r: f64, strategy: Strategy, seed: u64, err: &Error) -> Self {
        SweepRow {
            p,
            q,
            r,
            strategy: strategy.to_string(),
            seed: Some(seed),
            accuracy: None,
            gain_vs_pi: None,
            clique_count: None,
            freq_mean: None,
            freq_std: None,
            epochs: None,
            objective_final: None,
            status: format!("error: {err}"),
        }
    }

    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::io("<csv buffer>", e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let rows = r.deserialize().collect::<std::result::Result<Vec<SweepRow>, _>>()?;
        Ok(SweepTable { rows })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_csv()?).map_err(|e| Error::io(path, e))
    }

    pub fn data_rows(&self) -> impl Iterator<Item = &SweepRow> + '_ {
        self.rows.iter().filter(|r| r.seed.is_some())
    }

    pub fn aggregate_rows(&self, status: &str) -> impl Iterator<Item = &SweepRow> + '_ {
        let status = status.to_string();
        self.rows.iter().filter(move |r| r.seed.is_none() && r.status == status)
    }
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn aggregate(p: f64, q: f64, r: f64, strategy: Strategy, rows: &[&SweepRow]) -> Vec<SweepRow> {
    let ok: Vec<&SweepRow> = rows.iter().copied().filter(|r| r.is_ok()).collect();
    if ok.is_empty() {
        return Vec::new();
    }
    let col = |f: fn(&SweepRow) -> Option<f64>| -> (f64, f64) {
        mean_std(&ok.iter().filter_map(|r| f(r)).collect::<Vec<_>>())
    };
    let stats = [
        col(|r| r.accuracy),
        col(|r| r.gain_vs_pi),
        col(|r| r.clique_count),
        col(|r| r.freq_mean),
        col(|r| r.freq_std),
        col(|r| r.objective_final),
    ];
    let epochs = ok[0].epochs;
    ["mean", "std"]
        .iter()
        .enumerate()
        .map(|(which, status)| {
            let pick = |i: usize| Some(if which == 0 { stats[i].0 } else { stats[i].1 });
            SweepRow {
                p,
                q,
                r,
                strategy: strategy.to_string(),
                seed: None,
                accuracy: pick(0),
                gain_vs_pi: pick(1),
                clique_count: pick(2),
                freq_mean: pick(3),
                freq_std: pick(4),
                epochs,
                objective_final: pick(5),
                status: status.to_string(),
            }
        })
        .collect()
}

/// Table of one cell's replications followed by its `mean`/`std` rows.
pub fn report_table(config: &ExperimentConfig, reports: &[RunReport]) -> SweepTable {
    let (p, q, r) = (config.ppm.intra_prob, config.ppm.inter_prob, config.prior_ratio);
    let mut rows: Vec<SweepRow> = reports.iter().map(|rep| SweepRow::from_report(p, q, r, rep)).collect();
    let refs: Vec<&SweepRow> = rows.iter().collect();
    let agg = aggregate(p, q, r, config.strategy, &refs);
    rows.extend(agg);
    SweepTable { rows }
}

/// Run `strategies` over every `(p, q, r)` cell for `base.replications`
/// seeds. The seed of cell `(i, j, m)` replication `t` is
/// `derive_seed(base seed, [i, j, m, t])`. A failing cell yields error rows
/// and the sweep carries on. Each cell is followed by `mean`/`std` rows per
/// strategy.
pub fn sweep(grid: &SweepGrid, base: &ExperimentConfig, strategies: &[Strategy]) -> Result<SweepTable> {
    grid.validate()?;
    base.train.validate()?;
    if base.replications == 0 {
        return Err(Error::Config("replications must be at least 1".into()));
    }
    if strategies.is_empty() {
        return Err(Error::Config("no strategies to sweep".into()));
    }
    let mut jobs = Vec::new();
    for (i, &p) in grid.p.iter().enumerate() {
        for (j, &q) in grid.q.iter().enumerate() {
            for (m, &r) in grid.r.iter().enumerate() {
                for t in 0..base.replications {
                    jobs.push((p, q, r, derive_seed(base.ppm.seed, &[i as u64, j as u64, m as u64, t as u64])));
                }
            }
        }
    }
    let results: Vec<Vec<SweepRow>> = jobs
        .par_iter()
        .map(|&(p, q, r, seed)| {
            let mut cfg = base.clone();
            cfg.ppm.intra_prob = p;
            cfg.ppm.inter_prob = q;
            cfg.prior_ratio = r;
            let outcome = cfg
                .validate()
                .and_then(|_| PreparedCell::new(&cfg, seed))
                .and_then(|cell| run_cell(&cfg, &cell, strategies));
            match outcome {
                Ok(reports) => reports.iter().map(|rep| SweepRow::from_report(p, q, r, rep)).collect(),
                Err(e) => strategies.iter().map(|&s| SweepRow::failed(p, q, r, s, seed, &e)).collect(),
            }
        })
        .collect();

    let mut rows = Vec::new();
    for (cell_jobs, cell_rows) in jobs
        .chunks(base.replications)
        .zip(results.chunks(base.replications))
    {
        let (p, q, r, _) = cell_jobs[0];
        let flat: Vec<&SweepRow> = cell_rows.iter().flatten().collect();
        rows.extend(flat.iter().map(|&r| r.clone()));
        for &s in strategies {
            let name = s.to_string();
            let of_s: Vec<&SweepRow> = flat.iter().copied().filter(|r| r.strategy == name).collect();
            rows.extend(aggregate(p, q, r, s, &of_s));
        }
    }
    Ok(SweepTable { rows })
}

/// Parse an externally produced initial field. Rows must be non-negative and
/// sum to 1 within `1e-6`; they are renormalized exactly. Labeled rows
/// become one-hots.
pub fn parse_external_init(text: &str, graph: &Graph, labeled: &LabeledSets) -> Result<ProbabilityField> {
    let n = graph.num_nodes();
    let l = labeled.num_labels();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut data = Vec::with_capacity(n * l);
    let mut rows = 0;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        if i >= n {
            return Err(Error::Ingestion {
                row: i,
                msg: format!("more than {n} rows"),
            });
        }
        if rec.len() != l {
            return Err(Error::Ingestion {
                row: i,
                msg: format!("{} columns, expected {l}", rec.len()),
            });
        }
        let mut row = Vec::with_capacity(l);
        for t in rec.iter() {
            let x: f64 = t.parse().map_err(|_| Error::Ingestion {
                row: i,
                msg: format!("invalid number `{t}`"),
            })?;
            if !(x >= 0.0 && x.is_finite()) {
                return Err(Error::Ingestion {
                    row: i,
                    msg: format!("entry {x} is negative or not finite"),
                });
            }
            row.push(x);
        }
        let s: f64 = row.iter().sum();
        if (s - 1.0).abs() > 1e-6 {
            return Err(Error::Ingestion {
                row: i,
                msg: format!("row sums to {s}"),
            });
        }
        data.extend(row.iter().map(|x| x / s));
        rows += 1;
    }
    if rows != n {
        return Err(Error::Ingestion {
            row: rows,
            msg: format!("{rows} rows, expected {n}"),
        });
    }
    let mut field = ProbabilityField::from_raw(data, l)?;
    field.clamp_labeled(labeled);
    Ok(field)
}

pub fn load_external_init(path: impl AsRef<Path>, graph: &Graph, labeled: &LabeledSets) -> Result<ProbabilityField> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_external_init(&text, graph, labeled)
}
