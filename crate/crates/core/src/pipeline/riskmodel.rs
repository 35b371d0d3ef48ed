//! Check of the closed-form edge sensitivity of one-hop mean aggregation
//! under Gaussian class embeddings.
//!
//! For an intra-class pair `(i, j)` with `d_i` neighbors besides `j`, of
//! which `d_i^o` lie in the other class,
//!
//! ```text
//! E[Δd] ≈ ‖(μ_o − μ_c) δ‖,   δ = d_i^o / ((d_i+1)(d_i+2)) − d_j^o / ((d_j+1)(d_j+2))
//! ```
//!
//! and the approximation is exact when `σ = 0`.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{generate_sbm, Graph, SbmParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskModelConfig {
    pub mu0: Vec<f64>,
    pub mu1: Vec<f64>,
    pub sigma: f64,
    pub num_pairs: usize,
    pub seed: u64,
}

impl Default for RiskModelConfig {
    fn default() -> Self {
        RiskModelConfig {
            mu0: vec![0.0, 0.0],
            mu1: vec![1.0, 0.5],
            sigma: 0.1,
            num_pairs: 200,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskModelPair {
    pub i: usize,
    pub j: usize,
    pub class: usize,
    /// Degrees without the pair's own edge.
    pub d_i: usize,
    pub d_j: usize,
    /// Neighbors in the other class.
    pub d_i_other: usize,
    pub d_j_other: usize,
    pub delta: f64,
    pub closed_form: f64,
    pub empirical: f64,
    pub abs_deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskModelReport {
    pub sigma: f64,
    pub pairs: Vec<RiskModelPair>,
    pub mean_empirical: f64,
    pub mean_closed_form: f64,
    pub mean_abs_deviation: f64,
    pub max_abs_deviation: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Generates a two-class SBM and runs [`risk_model_on_graph`].
pub fn risk_model_check(params: &SbmParams, graph_seed: u64, config: &RiskModelConfig) -> Result<RiskModelReport> {
    let g = generate_sbm(params, graph_seed)?;
    risk_model_on_graph(&g, config)
}

/// Draws `E_v = μ_(y_v) + σ z_v`, then compares `‖d0 − d1‖` from exact
/// left-normalized aggregation with and without the pair's edge against the
/// closed form, over uniformly sampled intra-class pairs.
pub fn risk_model_on_graph(g: &Graph, config: &RiskModelConfig) -> Result<RiskModelReport> {
    if g.num_classes() != 2 {
        return Err(Error::InvalidArgument(format!(
            "risk model needs two classes, graph has {}",
            g.num_classes()
        )));
    }
    let m = config.mu0.len();
    if m == 0 || config.mu1.len() != m {
        return Err(Error::Shape("class means must be non-empty and equally long".into()));
    }
    if !(config.sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("sigma must be >= 0, got {}", config.sigma)));
    }
    let n = g.num_nodes();
    let labels: Vec<usize> = (0..n)
        .map(|v| g.labels()[v].ok_or_else(|| Error::InvalidArgument(format!("node {v} is unlabeled"))))
        .collect::<Result<_>>()?;
    let members: [Vec<usize>; 2] = [0, 1].map(|c| (0..n).filter(|&v| labels[v] == c).collect());
    for (c, mem) in members.iter().enumerate() {
        if mem.is_empty() {
            return Err(Error::Degenerate(format!("class {c} has no nodes")));
        }
    }
    if members.iter().all(|mem| mem.len() < 2) {
        return Err(Error::Degenerate("no intra-class pairs".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mus = [&config.mu0, &config.mu1];
    let emb: Vec<Vec<f64>> = (0..n)
        .map(|v| {
            mus[labels[v]]
                .iter()
                .map(|mu| {
                    let z: f64 = rng.sample(StandardNormal);
                    mu + config.sigma * z
                })
                .collect()
        })
        .collect();
    let gap: Vec<f64> = config.mu1.iter().zip(&config.mu0).map(|(a, b)| a - b).collect();
    let gap_norm = norm(&gap);

    // Sum of a node's embedding and its neighbors' except `skip`.
    let agg_sum = |v: usize, skip: usize| -> (Vec<f64>, usize, usize) {
        let mut s = emb[v].clone();
        let mut deg = 0;
        let mut other = 0;
        for &u in g.neighbors(v) {
            if u == skip {
                continue;
            }
            deg += 1;
            other += usize::from(labels[u] != labels[v]);
            s.iter_mut().zip(&emb[u]).for_each(|(a, b)| *a += b);
        }
        (s, deg, other)
    };

    let mut pairs = Vec::with_capacity(config.num_pairs);
    let pools: Vec<&Vec<usize>> = members.iter().filter(|mem| mem.len() >= 2).collect();
    for _ in 0..config.num_pairs {
        let pool = pools[rng.random_range(0..pools.len())];
        let picked = index::sample(&mut rng, pool.len(), 2);
        let (i, j) = (pool[picked.index(0)], pool[picked.index(1)]);
        let (si, di, oi) = agg_sum(i, j);
        let (sj, dj, oj) = agg_sum(j, i);
        let (fi, fj) = ((di + 1) as f64, (dj + 1) as f64);
        let diff: Vec<f64> = (0..m)
            .map(|k| {
                let d0 = si[k] / fi - sj[k] / fj;
                let d1 = (si[k] + emb[j][k]) / (fi + 1.0) - (sj[k] + emb[i][k]) / (fj + 1.0);
                d0 - d1
            })
            .collect();
        let empirical = norm(&diff);
        let delta = oi as f64 / (fi * (fi + 1.0)) - oj as f64 / (fj * (fj + 1.0));
        let closed_form = gap_norm * delta.abs();
        pairs.push(RiskModelPair {
            i,
            j,
            class: labels[i],
            d_i: di,
            d_j: dj,
            d_i_other: oi,
            d_j_other: oj,
            delta,
            closed_form,
            empirical,
            abs_deviation: (empirical - closed_form).abs(),
        });
    }
    let k = pairs.len().max(1) as f64;
    Ok(RiskModelReport {
        sigma: config.sigma,
        mean_empirical: pairs.iter().map(|p| p.empirical).sum::<f64>() / k,
        mean_closed_form: pairs.iter().map(|p| p.closed_form).sum::<f64>() / k,
        mean_abs_deviation: pairs.iter().map(|p| p.abs_deviation).sum::<f64>() / k,
        max_abs_deviation: pairs.iter().map(|p| p.abs_deviation).fold(0.0, f64::max),
        pairs,
    })
}
