//! Experiment orchestration: vanilla training, the fairness-regularized and
//! DP baselines, influence-guided reweighting with fine-tuning, and the
//! reports they produce.

mod correlation;
mod delta;
mod riskmodel;
mod study;

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use correlation::{correlation_analysis, Correlation, INCONFORMITY_THRESHOLD};
pub use delta::{delta_metric, from_relative, Channels, DeltaMetrics};
pub use riskmodel::{risk_model_check, risk_model_on_graph, RiskModelConfig, RiskModelPair, RiskModelReport};
pub use study::{synth_tradeoff_study, HopStats, StudyConfig, StudyReport, StudySeed};

use crate::attack::{evaluate_attack, finite_or_null, sample_pairs, AttackConfig, AttackReport};
use crate::error::{Error, Result};
use crate::fairness::bias;
use crate::gcn::{
    accuracy, fine_tune, train, write_history, EpochRecord, GcnInput, GcnModel, TrainConfig,
};
use crate::graph::{jaccard_similarity, load_dataset, generate_sbm, Graph, SbmParams, SimilarityMatrix};
use crate::influence::{influence_all, write_influences, FunctionalAux, InfluenceConfig, InfluenceVector, Target};
use crate::perturb::{edge_rand, lap_graph, pp_perturb, write_sidecar, Perturbation, Sidecar};
use crate::qclp::{build_problem, solve, write_weights, Feasibility};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Vanilla,
    Reg,
    Dpreg,
    Dpfr,
    Ppfr,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Vanilla, Method::Reg, Method::Dpreg, Method::Dpfr, Method::Ppfr];

    pub fn name(self) -> &'static str {
        match self {
            Method::Vanilla => "vanilla",
            Method::Reg => "reg",
            Method::Dpreg => "dpreg",
            Method::Dpfr => "dpfr",
            Method::Ppfr => "ppfr",
        }
    }

    /// Trains with the fairness regularizer.
    pub fn regularized(self) -> bool {
        matches!(self, Method::Reg | Method::Dpreg)
    }

    /// Vanilla phase followed by reweighted fine-tuning.
    pub fn reweighted(self) -> bool {
        matches!(self, Method::Dpfr | Method::Ppfr)
    }

    pub fn uses_dp(self) -> bool {
        matches!(self, Method::Dpreg | Method::Dpfr)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DpMechanism {
    Edgerand,
    Lapgraph,
}

impl FromStr for DpMechanism {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "edgerand" => Ok(DpMechanism::Edgerand),
            "lapgraph" => Ok(DpMechanism::Lapgraph),
            _ => Err(Error::InvalidArgument(format!("unknown DP mechanism {s:?}"))),
        }
    }
}

/// Graphs with more nodes than this use LapGraph unless overridden.
pub const LAPGRAPH_NODE_THRESHOLD: usize = 10_000;

pub fn route_dp(num_nodes: usize, choice: Option<DpMechanism>) -> DpMechanism {
    choice.unwrap_or(if num_nodes > LAPGRAPH_NODE_THRESHOLD {
        DpMechanism::Lapgraph
    } else {
        DpMechanism::Edgerand
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Dataset { path: PathBuf },
    Sbm { params: SbmParams, seed: u64 },
}

impl DataSource {
    pub fn load(&self) -> Result<Graph> {
        match self {
            DataSource::Dataset { path } => load_dataset(path),
            DataSource::Sbm { params, seed } => generate_sbm(params, *seed),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub method: Method,
    /// `epochs` is the vanilla budget `e_va`; `seed` is replaced per run.
    pub train: TrainConfig,
    /// Fairness weight of the regularized methods.
    pub lambda_fair: f64,
    /// Fine-tuning fraction: `e_re = round(s · e_va)`.
    pub s: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub eps: f64,
    /// `None` routes by graph size.
    pub dp: Option<DpMechanism>,
    pub attack: AttackConfig,
    pub influence: InfluenceConfig,
    pub qclp_tol: f64,
    pub qclp_max_iter: usize,
    /// Also compute risk influences and their correlation with bias influences.
    pub correlation: bool,
    pub seeds: Vec<u64>,
}

impl ExperimentConfig {
    pub fn new(data: DataSource, method: Method) -> Self {
        ExperimentConfig {
            data,
            method,
            train: TrainConfig::default(),
            lambda_fair: TrainConfig::REG_LAMBDA_FAIR,
            s: 0.2,
            alpha: crate::qclp::QclpProblem::DEFAULT_ALPHA,
            beta: crate::qclp::QclpProblem::DEFAULT_BETA,
            gamma: 0.5,
            eps: 1.0,
            dp: None,
            attack: AttackConfig::default(),
            influence: InfluenceConfig::default(),
            qclp_tol: 1e-8,
            qclp_max_iter: 2000,
            correlation: false,
            seeds: vec![0, 1, 2],
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        self.train.validate()?;
        if !(0.0..=1.0).contains(&self.s) {
            return bad(format!("s must lie in [0, 1], got {}", self.s));
        }
        if !(self.alpha > 0.0) || !(self.beta >= 0.0) {
            return bad("alpha must be > 0 and beta >= 0".into());
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return bad(format!("gamma must be finite and >= 0, got {}", self.gamma));
        }
        if !(self.eps > 0.0) {
            return bad(format!("eps must be > 0, got {}", self.eps));
        }
        if self.method.regularized() && !(self.lambda_fair > 0.0) {
            return bad(format!("{} needs lambda_fair > 0", self.method));
        }
        if self.seeds.is_empty() {
            return bad("at least one seed is required".into());
        }
        if self.attack.metrics.is_empty() {
            return bad("at least one attack distance is required".into());
        }
        if !(self.qclp_tol > 0.0) {
            return bad("qclp tolerance must be positive".into());
        }
        Ok(())
    }

    pub fn fine_tune_epochs(&self) -> usize {
        (self.s * self.train.epochs as f64).round() as usize
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn train_config(&self, seed: u64, lambda_fair: f64) -> TrainConfig {
        TrainConfig {
            seed,
            lambda_fair,
            ..self.train.clone()
        }
    }
}

/// Headline numbers of one evaluated model.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    /// Test-set accuracy.
    pub accuracy: f64,
    pub bias: f64,
    pub bias_normalized: f64,
    pub mean_auc: f64,
    pub f_risk: f64,
    #[serde(with = "finite_or_null")]
    pub f_risk_normalized: f64,
    pub auc: BTreeMap<String, f64>,
}

impl Summary {
    pub fn channels(&self) -> Channels {
        Channels {
            accuracy: self.accuracy,
            bias: self.bias,
            risk: self.mean_auc,
        }
    }

    /// Entrywise mean of several summaries.
    pub fn mean(items: &[&Summary]) -> Summary {
        let k = items.len() as f64;
        let avg = |f: &dyn Fn(&Summary) -> f64| items.iter().map(|s| f(s)).sum::<f64>() / k;
        let mut auc = BTreeMap::new();
        for name in items[0].auc.keys() {
            auc.insert(name.clone(), avg(&|s| s.auc[name]));
        }
        Summary {
            accuracy: avg(&|s| s.accuracy),
            bias: avg(&|s| s.bias),
            bias_normalized: avg(&|s| s.bias_normalized),
            mean_auc: avg(&|s| s.mean_auc),
            f_risk: avg(&|s| s.f_risk),
            f_risk_normalized: avg(&|s| s.f_risk_normalized),
            auc,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Train,
    Perturb,
    Influence,
    Reweight,
    FineTune,
    Evaluate,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Train => "train",
            Stage::Perturb => "perturb",
            Stage::Influence => "influence",
            Stage::Reweight => "reweight",
            Stage::FineTune => "fine_tune",
            Stage::Evaluate => "evaluate",
        })
    }
}

/// A pipeline stage and the global epoch count when it started.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageEvent {
    pub stage: Stage,
    pub epoch: usize,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QclpSummary {
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub feasibility: Feasibility,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub summary: Summary,
    pub attack: AttackReport,
    /// Same-seed vanilla model; absent for vanilla runs.
    pub vanilla: Option<Summary>,
    pub delta: Option<DeltaMetrics>,
    pub influence_r: Option<f64>,
    pub qclp: Option<QclpSummary>,
    pub perturbation: Option<Sidecar>,
    pub stages: Vec<StageEvent>,
    pub runtime_secs: f64,
}

/// Everything one seed produced, including artifacts kept out of the report.
#[derive(Clone, Debug)]
pub struct SeedOutcome {
    pub report: SeedReport,
    pub model: GcnModel,
    pub predictions: Array2<f64>,
    /// Training then fine-tuning, with fine-tune epochs offset by `e_va`.
    pub history: Vec<EpochRecord>,
    pub weights: Option<(Vec<usize>, Vec<f64>)>,
    pub influences: Option<Influences>,
    pub perturbation: Option<Perturbation>,
}

#[derive(Clone, Debug)]
pub struct Influences {
    pub utility: InfluenceVector,
    pub bias: InfluenceVector,
    pub risk: Option<InfluenceVector>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetInfo {
    pub num_nodes: usize,
    pub num_edges: usize,
    pub num_classes: usize,
    pub feature_dim: usize,
    pub num_train: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub method: Method,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub dataset: DatasetInfo,
    pub per_seed: Vec<SeedReport>,
    pub mean: Summary,
    pub vanilla_mean: Option<Summary>,
    /// From the seed-averaged channels.
    pub delta: Option<DeltaMetrics>,
    pub influence_r_mean: Option<f64>,
    pub runtime_secs: f64,
}

#[derive(Clone, Debug)]
pub struct Experiment {
    pub report: ExperimentReport,
    pub outcomes: Vec<SeedOutcome>,
}

/// Fixed inputs shared by every seed.
pub struct Context {
    pub graph: Graph,
    pub similarity: SimilarityMatrix,
}

impl Context {
    pub fn new(graph: Graph) -> Self {
        let similarity = jaccard_similarity(&graph);
        Context { graph, similarity }
    }
}

fn at_stage<T>(stage: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| e.at_stage(stage))
}

/// Seed of the perturbation stream, kept apart from the model seed.
fn perturb_seed(seed: u64) -> u64 {
    seed ^ 0x5EED_9E37_79B9_7F4A
}

/// Accuracy, bias and attack of final predictions, always against the
/// original graph.
pub fn evaluate(ctx: &Context, y: &Array2<f64>, attack: &AttackConfig, seed: u64) -> Result<(Summary, AttackReport)> {
    let g = &ctx.graph;
    if g.test_nodes().is_empty() {
        return Err(Error::InvalidArgument("graph has no test nodes".into()));
    }
    let acc = accuracy(y, g.labels(), g.test_nodes())?;
    let b = bias(&y.view(), &ctx.similarity);
    let sample = sample_pairs(g, seed, attack.max_edges)?;
    let report = evaluate_attack(&sample, y, attack)?;
    let summary = Summary {
        accuracy: acc,
        bias: b.value,
        bias_normalized: b.normalized_value,
        mean_auc: report.mean_auc,
        f_risk: report.f_risk,
        f_risk_normalized: report.f_risk_normalized,
        auc: report.per_distance.iter().map(|(k, v)| (k.clone(), v.auc)).collect(),
    };
    Ok((summary, report))
}

fn dp_perturb(config: &ExperimentConfig, g: &Graph, seed: u64) -> Result<Perturbation> {
    match route_dp(g.num_nodes(), config.dp) {
        DpMechanism::Edgerand => edge_rand(g, config.eps, perturb_seed(seed)),
        DpMechanism::Lapgraph => lap_graph(g, config.eps, perturb_seed(seed)),
    }
}

struct StageLog {
    events: Vec<StageEvent>,
    seed: u64,
}

impl StageLog {
    fn push(&mut self, stage: Stage, epoch: usize, detail: impl Into<String>) {
        let detail = detail.into();
        log::info!("seed {}: stage {stage} at epoch {epoch}: {detail}", self.seed);
        self.events.push(StageEvent { stage, epoch, detail });
    }
}

/// Runs one method for one seed.
pub fn run_seed(ctx: &Context, config: &ExperimentConfig, seed: u64) -> Result<SeedOutcome> {
    config.validate()?;
    let start = Instant::now();
    let g = &ctx.graph;
    let sim = &ctx.similarity;
    let e_va = config.train.epochs;
    let mut log = StageLog { events: Vec::new(), seed };
    let mut weights = None;
    let mut influences = None;
    let mut perturbation = None;
    let mut qclp = None;
    let mut influence_r = None;

    let vanilla_cfg = config.train_config(seed, 0.0);
    let (model, predictions, history, vanilla) = match config.method {
        Method::Vanilla => {
            log.push(Stage::Train, 0, format!("vanilla, {e_va} epochs"));
            let r = at_stage("train", train(g, &vanilla_cfg, Some(sim)))?;
            (r.model, r.predictions, r.history, None)
        }
        Method::Reg | Method::Dpreg => {
            let baseline = at_stage("train", train(g, &vanilla_cfg, Some(sim)))?;
            let (vs, _) = at_stage("evaluate", evaluate(ctx, &baseline.predictions, &config.attack, seed))?;
            let train_graph = if config.method == Method::Dpreg {
                log.push(Stage::Perturb, 0, format!("{:?}, eps {}", route_dp(g.num_nodes(), config.dp), config.eps));
                let p = at_stage("perturb", dp_perturb(config, g, seed))?;
                let g2 = at_stage("perturb", p.apply(g))?;
                perturbation = Some(p);
                Some(g2)
            } else {
                None
            };
            let reg_cfg = config.train_config(seed, config.lambda_fair);
            log.push(Stage::Train, 0, format!("fairness-regularized, lambda {}, {e_va} epochs", config.lambda_fair));
            let r = at_stage("train", train(train_graph.as_ref().unwrap_or(g), &reg_cfg, Some(sim)))?;
            (r.model, r.predictions, r.history, Some(vs))
        }
        Method::Dpfr | Method::Ppfr => {
            log.push(Stage::Train, 0, format!("vanilla, {e_va} epochs"));
            let base = at_stage("train", train(g, &vanilla_cfg, Some(sim)))?;
            let (vs, _) = at_stage("evaluate", evaluate(ctx, &base.predictions, &config.attack, seed))?;

            log.push(Stage::Influence, e_va, "utility and bias influences");
            let input = GcnInput::new(g);
            let pairs = if config.correlation {
                Some(at_stage("influence", sample_pairs(g, seed, config.attack.max_edges))?)
            } else {
                None
            };
            let aux = FunctionalAux {
                similarity: Some(sim),
                pairs: pairs.as_ref(),
            };
            let i_util = at_stage("influence", influence_all(&base.model, &input, Target::Utility, &aux, &config.influence))?;
            let i_bias = at_stage("influence", influence_all(&base.model, &input, Target::Bias, &aux, &config.influence))?;
            let i_risk = if config.correlation {
                let r = at_stage("influence", influence_all(&base.model, &input, Target::Risk, &aux, &config.influence))?;
                influence_r = Some(at_stage("influence", crate::influence::pearson(&i_bias.values, &r.values))?);
                Some(r)
            } else {
                None
            };

            log.push(Stage::Reweight, e_va, format!("alpha {}, beta {}", config.alpha, config.beta));
            let problem = at_stage("reweight", build_problem(&i_bias, &i_util, config.alpha, config.beta))?;
            let sol = at_stage("reweight", solve(&problem, config.qclp_tol, config.qclp_max_iter))?;
            qclp = Some(QclpSummary {
                objective: sol.objective,
                iterations: sol.iterations,
                converged: sol.converged,
                feasibility: sol.feasibility,
            });

            let p = if config.method == Method::Dpfr {
                log.push(Stage::Perturb, e_va, format!("{:?}, eps {}", route_dp(g.num_nodes(), config.dp), config.eps));
                at_stage("perturb", dp_perturb(config, g, seed))?
            } else {
                log.push(Stage::Perturb, e_va, format!("heterophilic injection, gamma {}", config.gamma));
                at_stage("perturb", pp_perturb(g, &base.predictions, config.gamma, perturb_seed(seed)))?
            };
            let g_prime = at_stage("perturb", p.apply(g))?;

            let e_re = config.fine_tune_epochs();
            log.push(Stage::FineTune, e_va, format!("{e_re} epochs on the perturbed graph"));
            let ft = at_stage(
                "fine_tune",
                fine_tune(&base.model, &g_prime, Some(&sol.weights), e_re, &vanilla_cfg, Some(sim)),
            )?;
            let mut history = base.history;
            history.extend(ft.history.into_iter().map(|r| EpochRecord {
                epoch: r.epoch + e_va,
                ..r
            }));
            weights = Some((sol.nodes, sol.weights));
            influences = Some(Influences {
                utility: i_util,
                bias: i_bias,
                risk: i_risk,
            });
            perturbation = Some(p);
            (ft.model, ft.predictions, history, Some(vs))
        }
    };

    let total_epochs = history.len();
    log.push(Stage::Evaluate, total_epochs, "original graph");
    let (summary, attack) = at_stage("evaluate", evaluate(ctx, &predictions, &config.attack, seed))?;
    let delta = match &vanilla {
        Some(v) => Some(at_stage("evaluate", delta_metric(&v.channels(), &summary.channels()))?),
        None => None,
    };
    Ok(SeedOutcome {
        report: SeedReport {
            seed,
            summary,
            attack,
            vanilla,
            delta,
            influence_r,
            qclp,
            perturbation: perturbation.as_ref().map(Perturbation::sidecar),
            stages: log.events,
            runtime_secs: start.elapsed().as_secs_f64(),
        },
        model,
        predictions,
        history,
        weights,
        influences,
        perturbation,
    })
}

/// Runs every configured seed (in parallel) and aggregates the report.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    let start = Instant::now();
    let graph = at_stage("load", config.data.load())?;
    let ctx = Context::new(graph);
    run_on(&ctx, config, start)
}

/// Same as [`run_experiment`] on an already loaded graph.
pub fn run_experiment_on(ctx: &Context, config: &ExperimentConfig) -> Result<Experiment> {
    config.validate()?;
    run_on(ctx, config, Instant::now())
}

fn run_on(ctx: &Context, config: &ExperimentConfig, start: Instant) -> Result<Experiment> {
    let outcomes: Vec<SeedOutcome> = config
        .seeds
        .par_iter()
        .map(|&s| run_seed(ctx, config, s))
        .collect::<Result<_>>()?;
    let reports: Vec<&SeedReport> = outcomes.iter().map(|o| &o.report).collect();
    let mean = Summary::mean(&reports.iter().map(|r| &r.summary).collect::<Vec<_>>());
    let vanilla_mean = if config.method == Method::Vanilla {
        None
    } else {
        let v: Vec<&Summary> = reports.iter().filter_map(|r| r.vanilla.as_ref()).collect();
        Some(Summary::mean(&v))
    };
    let delta = match &vanilla_mean {
        Some(v) => Some(delta_metric(&v.channels(), &mean.channels())?),
        None => None,
    };
    let rs: Vec<f64> = reports.iter().filter_map(|r| r.influence_r).collect();
    let influence_r_mean = (!rs.is_empty()).then(|| rs.iter().sum::<f64>() / rs.len() as f64);
    let g = &ctx.graph;
    let report = ExperimentReport {
        method: config.method,
        config_hash: config.hash(),
        config: config.clone(),
        dataset: DatasetInfo {
            num_nodes: g.num_nodes(),
            num_edges: g.num_edges(),
            num_classes: g.num_classes(),
            feature_dim: g.feature_dim(),
            num_train: g.train_nodes().len(),
        },
        per_seed: reports.into_iter().cloned().collect(),
        mean,
        vanilla_mean,
        delta,
        influence_r_mean,
        runtime_secs: start.elapsed().as_secs_f64(),
    };
    Ok(Experiment { report, outcomes })
}

pub fn run_method(config: &ExperimentConfig) -> Result<ExperimentReport> {
    run_experiment(config).map(|e| e.report)
}

/// JSON Schema of `report.json`.
pub const REPORT_SCHEMA: &str = include_str!("../../schema/report.schema.json");

pub fn write_report(path: impl AsRef<Path>, report: &ExperimentReport) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serde_json::to_string_pretty(report)?).map_err(|e| Error::io(path, e))
}

fn write_seed_artifacts(dir: &Path, o: &SeedOutcome) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_history(dir.join("history.csv"), &o.history)?;
    o.model.save(dir.join("model.bin"))?;
    if let Some((nodes, w)) = &o.weights {
        write_weights(dir.join("weights.csv"), nodes, w)?;
    }
    if let Some(inf) = &o.influences {
        write_influences(
            dir.join("influences.csv"),
            Some(&inf.utility),
            Some(&inf.bias),
            inf.risk.as_ref(),
        )?;
    }
    if let Some(p) = &o.perturbation {
        write_sidecar(dir.join("perturbation.json"), p)?;
    }
    Ok(())
}

/// Writes `report.json` plus the first seed's artifacts to `dir`; with
/// several seeds every seed also gets `seed_<s>/`.
pub fn write_outputs(dir: impl AsRef<Path>, exp: &Experiment) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_report(dir.join("report.json"), &exp.report)?;
    write_seed_artifacts(dir, &exp.outcomes[0])?;
    if exp.outcomes.len() > 1 {
        for o in &exp.outcomes {
            write_seed_artifacts(&dir.join(format!("seed_{}", o.report.seed)), o)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests;
