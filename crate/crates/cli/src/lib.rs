//! Command-line driver: argument parsing, thread setup, exit codes and the
//! artifact layout of each subcommand.
//!
//! Exit codes: 0 on success, 1 on usage or configuration errors, 2 on
//! runtime failures.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use fairleak_core::attack::AttackReport;
use fairleak_core::gcn::{train, GcnInput, GcnModel, TrainConfig};
use fairleak_core::graph::SbmParams;
use fairleak_core::influence::{influence_all, write_influences, FunctionalAux, Target};
use fairleak_core::perturb::{edge_rand, lap_graph, pp_perturb, save_perturbed, Perturbation};
use fairleak_core::pipeline::{
    correlation_analysis, evaluate, risk_model_check, run_experiment, synth_tradeoff_study,
    write_outputs, Context, DataSource, DpMechanism, ExperimentConfig, ExperimentReport, Method,
    RiskModelConfig, RiskModelReport, StudyConfig, Summary,
};
use fairleak_core::qclp::{build_problem, solve, write_weights, QclpProblem, QclpSolution};

pub const THREADS_ENV: &str = "FAIRLEAK_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Core(#[from] fairleak_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json error in {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl CliError {
    /// 1 for anything the caller can fix by changing arguments, 2 otherwise.
    pub fn exit_code(&self) -> i32 {
        fn core_code(e: &fairleak_core::Error) -> i32 {
            use fairleak_core::Error as E;
            match e {
                E::InvalidArgument(_) | E::MissingFile(_) => 1,
                E::Stage { source, .. } => core_code(source),
                _ => 2,
            }
        }
        match self {
            CliError::Config(_) => 1,
            CliError::Core(e) => core_code(e),
            CliError::Io { .. } | CliError::Json { .. } => 2,
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fairleak", version, about = "Fairness and edge-privacy experiments on GCNs")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one method end to end and write report.json plus artifacts.
    Run(RunArgs),
    /// Train a vanilla model (or load one) and run the link-stealing attack.
    Attack(AttackArgs),
    /// Utility, bias and risk influences of every train node.
    Influence(CommonArgs),
    /// Influence-guided QCLP loss weights.
    Reweight(CommonArgs),
    /// Perturb the graph and save it as a dataset directory.
    Perturb(PerturbArgs),
    /// Synthetic SBM study of connected versus unconnected pair distances.
    Synth(SynthArgs),
    /// Closed-form edge sensitivity of mean aggregation on a two-class SBM.
    Riskmodel(RiskModelArgs),
    /// Print a summary table of existing report.json files.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
#[group(id = "data", required = true, multiple = false)]
pub struct DataArgs {
    /// Dataset directory.
    #[arg(long, group = "data")]
    pub dataset: Option<PathBuf>,
    /// Synthetic graph `n,p,q,classes`.
    #[arg(long, group = "data", value_parser = parse_sbm)]
    pub sbm: Option<SbmParams>,
    /// Seed of the synthetic graph.
    #[arg(long, default_value_t = 0)]
    pub graph_seed: u64,
}

impl DataArgs {
    fn source(&self) -> DataSource {
        match (&self.dataset, &self.sbm) {
            (Some(path), _) => DataSource::Dataset { path: path.clone() },
            (None, Some(params)) => DataSource::Sbm {
                params: params.clone(),
                seed: self.graph_seed,
            },
            (None, None) => unreachable!("clap enforces the data group"),
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// First seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds starting at `--seed`.
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    /// Vanilla training epochs.
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    pub lr: f64,
    #[arg(long, default_value_t = 5e-4)]
    pub weight_decay: f64,
    #[arg(long, default_value_t = TrainConfig::REG_LAMBDA_FAIR)]
    pub lambda_fair: f64,
    #[arg(long, default_value_t = QclpProblem::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[arg(long, default_value_t = QclpProblem::DEFAULT_BETA)]
    pub beta: f64,
    /// Heterophilic edges per node as a fraction of its degree.
    #[arg(long, default_value_t = 0.5)]
    pub gamma: f64,
    /// Fine-tuning epochs as a fraction of `--epochs`.
    #[arg(long, default_value_t = 0.2)]
    pub s: f64,
    /// Edge-DP privacy budget.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
    /// DP mechanism; routed by graph size when absent.
    #[arg(long)]
    pub dp: Option<DpMechanism>,
    /// Also compute risk influences and their correlation with bias.
    #[arg(long)]
    pub correlation: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

impl CommonArgs {
    fn config(&self, method: Method) -> Result<ExperimentConfig> {
        if self.seeds == 0 {
            return Err(CliError::Config("--seeds must be at least 1".into()));
        }
        let mut c = ExperimentConfig::new(self.data.source(), method);
        c.train = TrainConfig {
            hidden: self.hidden,
            epochs: self.epochs,
            learning_rate: self.lr,
            weight_decay: self.weight_decay,
            ..TrainConfig::default()
        };
        c.lambda_fair = self.lambda_fair;
        c.alpha = self.alpha;
        c.beta = self.beta;
        c.gamma = self.gamma;
        c.s = self.s;
        c.eps = self.eps;
        c.dp = self.dp;
        c.correlation = self.correlation;
        c.seeds = (0..self.seeds as u64).map(|k| self.seed + k).collect();
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long, default_value = "vanilla")]
    pub method: Method,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Model file from a previous run; a vanilla model is trained otherwise.
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerturbKind {
    Pp,
    Edgerand,
    Lapgraph,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    #[arg(long, value_enum, default_value = "pp")]
    pub mechanism: PerturbKind,
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub n: usize,
    #[arg(long, default_value_t = 0.01)]
    pub p: f64,
    #[arg(long, default_value_t = 0.002)]
    pub q: f64,
    #[arg(long, default_value_t = 2)]
    pub classes: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 3)]
    pub seeds: usize,
    #[arg(long, default_value_t = 16)]
    pub hidden: usize,
    #[arg(long, default_value_t = 200)]
    pub epochs: usize,
    #[arg(long, default_value_t = TrainConfig::REG_LAMBDA_FAIR)]
    pub lambda_fair: f64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RiskModelArgs {
    #[arg(long, default_value_t = 300)]
    pub n: usize,
    #[arg(long, default_value_t = 0.05)]
    pub p: f64,
    #[arg(long, default_value_t = 0.02)]
    pub q: f64,
    /// Embedding noise levels, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0,0.5,0.1,0.02")]
    pub sigma: Vec<f64>,
    #[arg(long, default_value_t = 200)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// report.json files or directories containing one.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

fn parse_sbm(s: &str) -> std::result::Result<SbmParams, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("expected n,p,q,classes, got {s:?}"));
    }
    let n = parts[0].parse::<usize>().map_err(|e| format!("n: {e}"))?;
    let p = parts[1].parse::<f64>().map_err(|e| format!("p: {e}"))?;
    let q = parts[2].parse::<f64>().map_err(|e| format!("q: {e}"))?;
    let c = parts[3].parse::<usize>().map_err(|e| format!("classes: {e}"))?;
    let params = SbmParams::new(n, p, q, c);
    params.validate().map_err(|e| e.to_string())?;
    Ok(params)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|source| CliError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Caps the global rayon pool at `$FAIRLEAK_THREADS` when set.
pub fn configure_threads() -> Result<()> {
    let Some(raw) = std::env::var_os(THREADS_ENV) else {
        return Ok(());
    };
    let n = raw
        .to_str()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    // A pool built earlier in the same process keeps its size.
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
        log::debug!("thread pool already initialized: {e}");
    }
    Ok(())
}

fn first_seed_context(common: &CommonArgs) -> Result<(ExperimentConfig, Context, TrainConfig)> {
    let config = common.config(Method::Vanilla)?;
    let graph = config.data.load()?;
    let train_cfg = TrainConfig {
        seed: common.seed,
        ..config.train.clone()
    };
    Ok((config, Context::new(graph), train_cfg))
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let config = args.common.config(args.method)?;
    let exp = run_experiment(&config)?;
    write_outputs(&args.common.out, &exp)?;
    let r = &exp.report;
    println!(
        "{}: accuracy {:.4}, bias {:.6}, mean AUC {:.4}, delta {} over {} seed(s) -> {}",
        r.method,
        r.mean.accuracy,
        r.mean.bias,
        r.mean.mean_auc,
        r.delta
            .as_ref()
            .and_then(|d| d.delta)
            .map_or("n/a".to_string(), |d| format!("{d:.4}")),
        r.per_seed.len(),
        args.common.out.join("report.json").display()
    );
    Ok(())
}

#[derive(Serialize)]
struct AttackOutput<'a> {
    seed: u64,
    summary: &'a Summary,
    attack: &'a AttackReport,
}

fn cmd_attack(args: &AttackArgs) -> Result<()> {
    let (config, ctx, train_cfg) = first_seed_context(&args.common)?;
    let predictions = match &args.model {
        Some(path) => {
            let model = GcnModel::load(path)?;
            GcnInput::new(&ctx.graph).forward(&model)?.into_predictions()
        }
        None => train(&ctx.graph, &train_cfg, Some(&ctx.similarity))?.predictions,
    };
    let (summary, attack) = evaluate(&ctx, &predictions, &config.attack, args.common.seed)?;
    create_dir(&args.common.out)?;
    let path = args.common.out.join("attack.json");
    write_json(
        &path,
        &AttackOutput {
            seed: args.common.seed,
            summary: &summary,
            attack: &attack,
        },
    )?;
    println!(
        "mean AUC {:.4} over {} edges, f_risk {:.6} -> {}",
        attack.mean_auc,
        attack.num_positives,
        attack.f_risk,
        path.display()
    );
    Ok(())
}

fn cmd_influence(args: &CommonArgs) -> Result<()> {
    let (config, ctx, train_cfg) = first_seed_context(args)?;
    let base = train(&ctx.graph, &train_cfg, Some(&ctx.similarity))?;
    let input = GcnInput::new(&ctx.graph);
    let aux = FunctionalAux {
        similarity: Some(&ctx.similarity),
        pairs: None,
    };
    let util = influence_all(&base.model, &input, Target::Utility, &aux, &config.influence)?;
    let corr = correlation_analysis(
        &base.model,
        &ctx.graph,
        &ctx.similarity,
        config.attack.max_edges,
        args.seed,
        &config.influence,
    )?;
    create_dir(&args.out)?;
    let path = args.out.join("influences.csv");
    write_influences(&path, Some(&util), Some(&corr.bias), Some(&corr.risk))?;
    base.model.save(args.out.join("model.bin"))?;
    println!(
        "{} train nodes, pearson(bias, risk) = {:.4}{} -> {}",
        util.nodes.len(),
        corr.r,
        if corr.inconformity { " (inconformity)" } else { "" },
        path.display()
    );
    Ok(())
}

fn cmd_reweight(args: &CommonArgs) -> Result<()> {
    let (config, ctx, train_cfg) = first_seed_context(args)?;
    let base = train(&ctx.graph, &train_cfg, Some(&ctx.similarity))?;
    let input = GcnInput::new(&ctx.graph);
    let aux = FunctionalAux {
        similarity: Some(&ctx.similarity),
        pairs: None,
    };
    let util = influence_all(&base.model, &input, Target::Utility, &aux, &config.influence)?;
    let bias = influence_all(&base.model, &input, Target::Bias, &aux, &config.influence)?;
    let problem = build_problem(&bias, &util, config.alpha, config.beta)?;
    let sol: QclpSolution = solve(&problem, config.qclp_tol, config.qclp_max_iter)?;
    create_dir(&args.out)?;
    write_weights(args.out.join("weights.csv"), &sol.nodes, &sol.weights)?;
    write_influences(args.out.join("influences.csv"), Some(&util), Some(&bias), None)?;
    write_json(&args.out.join("qclp.json"), &sol)?;
    println!(
        "objective {:.6e} after {} iterations (converged: {}) -> {}",
        sol.objective,
        sol.iterations,
        sol.converged,
        args.out.join("weights.csv").display()
    );
    Ok(())
}

fn cmd_perturb(args: &PerturbArgs) -> Result<()> {
    let common = &args.common;
    let (config, ctx, train_cfg) = first_seed_context(common)?;
    let g = &ctx.graph;
    let p: Perturbation = match args.mechanism {
        PerturbKind::Pp => {
            let base = train(g, &train_cfg, Some(&ctx.similarity))?;
            pp_perturb(g, &base.predictions, config.gamma, common.seed)?
        }
        PerturbKind::Edgerand => edge_rand(g, config.eps, common.seed)?,
        PerturbKind::Lapgraph => lap_graph(g, config.eps, common.seed)?,
    };
    save_perturbed(g, &p, &common.out)?;
    println!(
        "{}: {} edges added, {} removed{} -> {}",
        p.mechanism,
        p.added.len(),
        p.removed.len(),
        if p.exhausted { " (candidates exhausted)" } else { "" },
        common.out.display()
    );
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    if args.seeds == 0 {
        return Err(CliError::Config("--seeds must be at least 1".into()));
    }
    let params = SbmParams::new(args.n, args.p, args.q, args.classes);
    params.validate()?;
    let config = StudyConfig {
        train: TrainConfig {
            hidden: args.hidden,
            epochs: args.epochs,
            ..TrainConfig::default()
        },
        lambda_fair: args.lambda_fair,
        seeds: (0..args.seeds as u64).map(|k| args.seed + k).collect(),
        ..StudyConfig::default()
    };
    config.train.validate()?;
    let report = synth_tradeoff_study(&params, &config)?;
    create_dir(&args.out)?;
    let path = args.out.join("study.json");
    write_json(&path, &report)?;
    println!(
        "two-hop fraction {:.4e} (formula {:.4e}); rel change d1 {:+.4}, d0 {:+.4}, ratio {:.2}{} -> {}",
        report.two_hop_empirical,
        report.two_hop_theoretical,
        report.mean_d1_rel_change,
        report.mean_d0_rel_change,
        report.change_ratio,
        if report.hypotheses_unmet { " (hypotheses unmet)" } else { "" },
        path.display()
    );
    Ok(())
}

fn cmd_riskmodel(args: &RiskModelArgs) -> Result<()> {
    let mut params = SbmParams::new(args.n, args.p, args.q, 2);
    params.feature_dim = 2;
    params.validate()?;
    let reports: Vec<RiskModelReport> = args
        .sigma
        .iter()
        .map(|&sigma| {
            let cfg = RiskModelConfig {
                sigma,
                num_pairs: args.pairs,
                seed: args.seed,
                ..RiskModelConfig::default()
            };
            risk_model_check(&params, args.seed, &cfg)
        })
        .collect::<fairleak_core::Result<_>>()?;
    create_dir(&args.out)?;
    let path = args.out.join("riskmodel.json");
    write_json(&path, &reports)?;
    for r in &reports {
        println!(
            "sigma {}: mean |deviation| {:.3e}, max {:.3e}",
            r.sigma, r.mean_abs_deviation, r.max_abs_deviation
        );
    }
    println!("-> {}", path.display());
    Ok(())
}

fn read_report(path: &Path) -> Result<ExperimentReport> {
    let file = if path.is_dir() { path.join("report.json") } else { path.to_path_buf() };
    let text = fs::read_to_string(&file).map_err(|source| CliError::Io {
        path: file.clone(),
        source,
    })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path: file, source })
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    println!(
        "{:<8} {:>6} {:>9} {:>11} {:>9} {:>9}  hash",
        "method", "seeds", "accuracy", "bias", "mean_auc", "delta"
    );
    for path in &args.paths {
        let r = read_report(path)?;
        let delta = r
            .delta
            .as_ref()
            .and_then(|d| d.delta)
            .map_or("-".to_string(), |d| format!("{d:.4}"));
        println!(
            "{:<8} {:>6} {:>9.4} {:>11.6} {:>9.4} {:>9}  {}",
            r.method.name(),
            r.per_seed.len(),
            r.mean.accuracy,
            r.mean.bias,
            r.mean.mean_auc,
            delta,
            &r.config_hash[..12.min(r.config_hash.len())]
        );
    }
    Ok(())
}

pub fn execute(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Attack(a) => cmd_attack(a),
        Command::Influence(a) => cmd_influence(a),
        Command::Reweight(a) => cmd_reweight(a),
        Command::Perturb(a) => cmd_perturb(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Riskmodel(a) => cmd_riskmodel(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// process exit code.
pub fn cli_main<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let result = configure_threads().and_then(|()| execute(&cli));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
