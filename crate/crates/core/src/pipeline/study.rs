//! Synthetic study of how fairness regularization moves connected and
//! unconnected pair distances on a stochastic block model.

use serde::{Deserialize, Serialize};

use crate::attack::{pair_distance, sample_pairs, Metric, PairSample};
use crate::error::{Error, Result};
use crate::gcn::{train, TrainConfig};
use crate::graph::{
    generate_sbm, hop_distance, jaccard_similarity, theoretical_ratio, two_hop_ratio, HopClass,
    SbmParams,
};
use ndarray::Array2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    /// `seed` is replaced by each study seed.
    pub train: TrainConfig,
    pub lambda_fair: f64,
    pub seeds: Vec<u64>,
    pub metric: Metric,
    /// Cap on sampled edges (and matching non-edges) per seed.
    pub max_pairs: usize,
    /// Required `|Δd̄1| / |Δd̄0|` for the trade-off to count as reproduced.
    pub min_ratio: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            train: TrainConfig::default(),
            lambda_fair: TrainConfig::REG_LAMBDA_FAIR,
            seeds: vec![0, 1, 2],
            metric: Metric::Sqeuclidean,
            max_pairs: 5000,
            min_ratio: 5.0,
        }
    }
}

/// Mean pair distance of one hop class before and after regularization.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HopStats {
    /// `"1"`, `"2"` or `">2"`.
    pub hop: String,
    pub count: usize,
    pub mean_before: f64,
    pub mean_after: f64,
    pub rel_change: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudySeed {
    pub seed: u64,
    pub num_edges: usize,
    pub two_hop_ratio: f64,
    pub hops: Vec<HopStats>,
    pub d1_before: f64,
    pub d1_after: f64,
    pub d1_rel_change: f64,
    pub d0_before: f64,
    pub d0_after: f64,
    pub d0_rel_change: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub params: SbmParams,
    pub config: StudyConfig,
    pub per_seed: Vec<StudySeed>,
    pub mean_d1_rel_change: f64,
    pub mean_d0_rel_change: f64,
    /// `|mean Δd̄1| / |mean Δd̄0|`.
    pub change_ratio: f64,
    /// `None` when the graph is not homophilous.
    pub tradeoff_holds: Option<bool>,
    pub two_hop_empirical: f64,
    pub two_hop_theoretical: f64,
    pub two_hop_rel_error: f64,
    pub two_hop_within_20pct: bool,
    pub hypotheses_unmet: bool,
}

fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        f64::NAN
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

fn rel(after: f64, before: f64) -> f64 {
    (after - before) / before
}

fn distances(y: &Array2<f64>, pairs: &[(usize, usize)], metric: Metric) -> Vec<f64> {
    pairs
        .iter()
        .map(|&(i, j)| {
            let a: Vec<f64> = y.row(i).to_vec();
            let b: Vec<f64> = y.row(j).to_vec();
            pair_distance(&a, &b, metric).value
        })
        .collect()
}

fn hop_stats(label: &str, pairs: &[(usize, usize)], before: &Array2<f64>, after: &Array2<f64>, metric: Metric) -> HopStats {
    let b = mean(&distances(before, pairs, metric));
    let a = mean(&distances(after, pairs, metric));
    HopStats {
        hop: label.to_string(),
        count: pairs.len(),
        mean_before: b,
        mean_after: a,
        rel_change: rel(a, b),
    }
}

/// Trains vanilla and regularized models per seed and compares mean
/// distances of connected (`d̄1`) and sampled unconnected (`d̄0`) pairs.
pub fn synth_tradeoff_study(params: &SbmParams, config: &StudyConfig) -> Result<StudyReport> {
    params.validate()?;
    if config.seeds.is_empty() {
        return Err(Error::InvalidArgument("study needs at least one seed".into()));
    }
    let hypotheses_unmet = !params.is_homophilous();
    let two_hop_theoretical = theoretical_ratio(params.p, params.q)?;
    let mut per_seed = Vec::new();
    for &seed in &config.seeds {
        let g = generate_sbm(params, seed)?;
        if g.num_edges() == 0 {
            return Err(Error::Degenerate(format!("SBM with seed {seed} has no edges")));
        }
        let sim = jaccard_similarity(&g);
        let base = TrainConfig { seed, lambda_fair: 0.0, ..config.train.clone() };
        let reg = TrainConfig { lambda_fair: config.lambda_fair, ..base.clone() };
        let before = train(&g, &base, Some(&sim))?.predictions;
        let after = train(&g, &reg, Some(&sim))?.predictions;

        let sample: PairSample = sample_pairs(&g, seed, config.max_pairs)?;
        let mut two = Vec::new();
        let mut far = Vec::new();
        for &(i, j) in &sample.negatives {
            match hop_distance(&g, i, j, 2)? {
                HopClass::Finite(2) => two.push((i, j)),
                _ => far.push((i, j)),
            }
        }
        let one = hop_stats("1", &sample.positives, &before, &after, config.metric);
        let d0 = hop_stats("0", &sample.negatives, &before, &after, config.metric);
        let mut hops = vec![one.clone()];
        if !two.is_empty() {
            hops.push(hop_stats("2", &two, &before, &after, config.metric));
        }
        if !far.is_empty() {
            hops.push(hop_stats(">2", &far, &before, &after, config.metric));
        }
        per_seed.push(StudySeed {
            seed,
            num_edges: g.num_edges(),
            two_hop_ratio: two_hop_ratio(&g)?,
            hops,
            d1_before: one.mean_before,
            d1_after: one.mean_after,
            d1_rel_change: one.rel_change,
            d0_before: d0.mean_before,
            d0_after: d0.mean_after,
            d0_rel_change: d0.rel_change,
        });
    }
    let mean_d1_rel_change = mean(&per_seed.iter().map(|s| s.d1_rel_change).collect::<Vec<_>>());
    let mean_d0_rel_change = mean(&per_seed.iter().map(|s| s.d0_rel_change).collect::<Vec<_>>());
    let change_ratio = mean_d1_rel_change.abs() / mean_d0_rel_change.abs();
    let two_hop_empirical = mean(&per_seed.iter().map(|s| s.two_hop_ratio).collect::<Vec<_>>());
    let two_hop_rel_error = (two_hop_empirical - two_hop_theoretical).abs() / two_hop_theoretical;
    Ok(StudyReport {
        params: params.clone(),
        config: config.clone(),
        per_seed,
        mean_d1_rel_change,
        mean_d0_rel_change,
        change_ratio,
        tradeoff_holds: (!hypotheses_unmet).then_some(change_ratio >= config.min_ratio),
        two_hop_empirical,
        two_hop_theoretical,
        two_hop_rel_error,
        two_hop_within_20pct: two_hop_rel_error <= 0.2,
        hypotheses_unmet,
    })
}
