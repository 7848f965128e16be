use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use hoclique::augmax::{build_augmax, AugmentationConfig};
use hoclique::clique::{enumerate_all, enumerate_maximal, pairwise_set, participation, CliqueSet};
use hoclique::expected::{expected_counts, monte_carlo_counts, Normalization};
use hoclique::harness::{
    load_external_init, parse_key_values, report_table, run_replications, sweep, ExperimentConfig, Strategy,
    SweepGrid,
};
use hoclique::objective::{train, TrainConfig, WeightMode};
use hoclique::ppm::{derive_seed, generate_ppm, sample_prior, PpmConfig};
use hoclique::rw::{solve_dirichlet, solve_via_equilibrium, DEFAULT_TOL};
use hoclique::{Error, Graph, LabeledSets, Result};

#[derive(Parser)]
#[command(name = "hoclique", version, about = "Higher-order clique node classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a planted-partition graph.
    Gen(GenArgs),
    /// Enumerate a clique set.
    Cliques(CliquesArgs),
    /// Build the augmented maximal clique set.
    Augmax(AugmaxArgs),
    /// Random-walk initialization of the label distributions.
    Init(InitArgs),
    /// Minimize the clique objective from an initial field.
    Train(TrainArgs),
    /// Expected clique counts in the planted partition model.
    Expect(ExpectArgs),
    /// Run one experiment configuration for its replications.
    Run(RunArgs),
    /// Sweep a p/q/r grid.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Also sample a stratified prior with this ratio.
    #[arg(long, requires = "prior_out")]
    prior_ratio: Option<f64>,
    #[arg(long)]
    prior_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliqueMode {
    Maximal,
    All,
    Edges,
}

#[derive(Args)]
struct CliquesArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, value_enum, default_value = "maximal")]
    mode: CliqueMode,
    #[arg(long)]
    k_cap: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AugmaxArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    budget: Option<usize>,
    #[arg(long)]
    candidate_cap: Option<usize>,
    #[arg(long)]
    k_cap: Option<usize>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum InitMethod {
    Dirichlet,
    Equilibrium,
}

#[derive(Args)]
struct InitArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    labeled: PathBuf,
    #[arg(long, value_enum, default_value = "dirichlet")]
    method: InitMethod,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    tol: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Weights {
    Uniform,
    Linear,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    graph: PathBuf,
    #[arg(long)]
    cliques: PathBuf,
    #[arg(long)]
    init: PathBuf,
    #[arg(long)]
    labeled: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 20)]
    epochs: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    weights: Weights,
    #[arg(long)]
    out: PathBuf,
    /// JSON-lines trace, one record per epoch.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Norm {
    Multiplicity,
    PartFactorial,
}

#[derive(Args)]
struct ExpectArgs {
    #[arg(long, value_delimiter = ',', required = true)]
    sizes: Vec<usize>,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 8)]
    kmax: usize,
    #[arg(long, value_enum, default_value = "multiplicity")]
    normalization: Norm,
    /// Add Monte-Carlo mean and standard-error columns.
    #[arg(long)]
    verify: bool,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Experiment settings; each overrides the same key from `--config`.
#[derive(Args)]
struct ExperimentArgs {
    /// Flat key=value file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    p: Option<String>,
    #[arg(long)]
    q: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    strategy: Option<String>,
    #[arg(long)]
    budget: Option<String>,
    #[arg(long)]
    k_cap: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    weights: Option<String>,
    #[arg(long)]
    replications: Option<String>,
    #[arg(long)]
    eval_scope: Option<String>,
    /// Any other `key=value` setting; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ExperimentArgs {
    fn settings(&self) -> Result<BTreeMap<String, String>> {
        let mut map = match &self.config {
            Some(path) => parse_key_values(&read(path)?)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("sizes", &self.sizes),
            ("p", &self.p),
            ("q", &self.q),
            ("r", &self.r),
            ("seed", &self.seed),
            ("strategy", &self.strategy),
            ("budget", &self.budget),
            ("k_cap", &self.k_cap),
            ("lr", &self.lr),
            ("epochs", &self.epochs),
            ("weights", &self.weights),
            ("replications", &self.replications),
            ("eval_scope", &self.eval_scope),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                map.insert(key.to_string(), v.clone());
            }
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(map)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    /// Intra-community probabilities: `a,b,c` or `start:stop:step`.
    #[arg(long)]
    p_grid: String,
    #[arg(long)]
    q_grid: String,
    #[arg(long)]
    r_grid: String,
    #[arg(long, default_value = "PI,ALL,MAX,AUGMAX")]
    strategies: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::Config(format!("cannot write {}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write(path, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn parse_axis(s: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("bad grid `{s}`"));
    if let [a, b, c] = s.split(':').collect::<Vec<_>>()[..] {
        let num = |t: &str| t.trim().parse::<f64>().map_err(|_| bad());
        return SweepGrid::range(num(a)?, num(b)?, num(c)?);
    }
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|_| bad())).collect()
}

fn load_prior(path: &Path, graph: &Graph) -> Result<LabeledSets> {
    LabeledSets::load(path, graph.num_nodes(), graph.num_labels())
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let cfg = PpmConfig::new(a.sizes, a.p, a.q, a.seed);
    let g = generate_ppm(&cfg)?;
    g.save(&a.out)?;
    if let (Some(r), Some(path)) = (a.prior_ratio, a.prior_out) {
        sample_prior(&g, r, derive_seed(a.seed, &[1]))?.save(path)?;
    }
    eprintln!("{} nodes, {} edges", g.num_nodes(), g.num_edges());
    Ok(())
}

fn cmd_cliques(a: CliquesArgs) -> Result<()> {
    let g = Graph::load(&a.graph)?;
    let set = match a.mode {
        CliqueMode::Maximal => enumerate_maximal(&g),
        CliqueMode::All => enumerate_all(&g, a.k_cap)?,
        CliqueMode::Edges => pairwise_set(&g),
    };
    set.save(&a.out)?;
    let stats = participation(&set, g.num_nodes())?;
    eprintln!(
        "{} cliques, participation mean {} std {}",
        set.len(),
        stats.mean,
        stats.std_dev()
    );
    Ok(())
}

fn cmd_augmax(a: AugmaxArgs) -> Result<()> {
    let g = Graph::load(&a.graph)?;
    let maximal = enumerate_maximal(&g);
    let all = enumerate_all(&g, a.k_cap)?;
    let cfg = AugmentationConfig {
        budget: a.budget,
        candidate_cap: a.candidate_cap,
    };
    let aug = build_augmax(&maximal, &all, &cfg, g.num_nodes())?;
    aug.set.save(&a.out)?;
    let report = aug.report();
    if let Some(path) = a.report {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write(&path, &json)?;
    }
    eprintln!(
        "{} maximal + {} added, participation std {} -> {}",
        maximal.len(),
        report.additions,
        report.initial_std,
        report.final_std
    );
    Ok(())
}

fn cmd_init(a: InitArgs) -> Result<()> {
    let g = Graph::load(&a.graph)?;
    let labeled = load_prior(&a.labeled, &g)?;
    let field = match a.method {
        InitMethod::Dirichlet => solve_dirichlet(&g, &labeled, a.tol)?,
        InitMethod::Equilibrium => solve_via_equilibrium(&g, &labeled, a.tol)?,
    };
    field.save(&a.out)
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let g = Graph::load(&a.graph)?;
    let labeled = load_prior(&a.labeled, &g)?;
    let set = CliqueSet::load(&a.cliques, &g)?;
    let init = load_external_init(&a.init, &g, &labeled)?;
    let mut cfg = TrainConfig {
        learning_rate: a.lr,
        epochs: a.epochs,
        ..TrainConfig::default()
    };
    cfg.weights.mode = match a.weights {
        Weights::Uniform => WeightMode::Uniform,
        Weights::Linear => WeightMode::Linear,
    };
    let outcome = train(&g, &set, &init, &labeled, &cfg)?;
    outcome.field.save(&a.out)?;
    if let Some(path) = a.log {
        let mut text = String::new();
        for rec in &outcome.trace {
            text.push_str(&serde_json::to_string(rec).expect("record serializes"));
            text.push('\n');
        }
        write(&path, &text)?;
    }
    eprintln!(
        "objective {} -> {}",
        outcome.initial_objective,
        outcome.final_objective()
    );
    Ok(())
}

fn cmd_expect(a: ExpectArgs) -> Result<()> {
    let norm = match a.normalization {
        Norm::Multiplicity => Normalization::Multiplicity,
        Norm::PartFactorial => Normalization::PartFactorial,
    };
    let counts = expected_counts(&a.sizes, a.p, a.q, a.kmax, norm)?;
    let mc = if a.verify {
        Some(monte_carlo_counts(&a.sizes, a.p, a.q, a.kmax, a.trials, a.seed)?)
    } else {
        None
    };
    let mut text = String::from("k,expected_cliques,expected_maximal,ratio");
    if mc.is_some() {
        text.push_str(",mc_cliques_mean,mc_cliques_se,mc_maximal_mean,mc_maximal_se");
    }
    text.push('\n');
    for row in &counts.rows {
        text.push_str(&format!(
            "{},{},{},{}",
            row.k,
            row.cliques,
            row.maximal,
            row.cliques / row.maximal
        ));
        if let Some(m) = mc.as_ref().and_then(|m| m.row(row.k)) {
            text.push_str(&format!(
                ",{},{},{},{}",
                m.cliques_mean, m.cliques_se, m.maximal_mean, m.maximal_se
            ));
        }
        text.push('\n');
    }
    text.push_str(&format!(
        "total,{},{},{}\n",
        counts.total_cliques,
        counts.total_maximal,
        counts.ratio()
    ));
    emit(a.out.as_deref(), &text)
}

fn experiment_config(args: &ExperimentArgs) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::default();
    cfg.apply(&args.settings()?)?;
    Ok(cfg)
}

fn cmd_run(a: RunArgs) -> Result<()> {
    let cfg = experiment_config(&a.experiment)?;
    let reports = run_replications(&cfg)?;
    emit(a.out.as_deref(), &report_table(&cfg, &reports).to_csv()?)
}

fn cmd_sweep(a: SweepArgs) -> Result<()> {
    let cfg = experiment_config(&a.experiment)?;
    let grid = SweepGrid {
        p: parse_axis(&a.p_grid)?,
        q: parse_axis(&a.q_grid)?,
        r: parse_axis(&a.r_grid)?,
    };
    let strategies = a
        .strategies
        .split(',')
        .map(|s| s.trim().parse::<Strategy>())
        .collect::<Result<Vec<_>>>()?;
    let table = sweep(&grid, &cfg, &strategies)?;
    emit(a.out.as_deref(), &table.to_csv()?)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Cliques(a) => cmd_cliques(a),
        Command::Augmax(a) => cmd_augmax(a),
        Command::Init(a) => cmd_init(a),
        Command::Train(a) => cmd_train(a),
        Command::Expect(a) => cmd_expect(a),
        Command::Run(a) => cmd_run(a),
        Command::Sweep(a) => cmd_sweep(a),
    };
    let _ = std::io::stdout().flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
