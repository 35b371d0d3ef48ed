//! Black-box link stealing from prediction rows: pair sampling, eight
//! distances, rank AUC, a two-cluster split and the `f_risk` statistics.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Balanced evaluation set: edges and an equal number of unconnected pairs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSample {
    pub positives: Vec<(usize, usize)>,
    pub negatives: Vec<(usize, usize)>,
    pub seed: u64,
    /// Fewer unconnected pairs existed than positives.
    pub negatives_exhausted: bool,
}

impl PairSample {
    pub fn len(&self) -> usize {
        self.positives.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Positives then negatives, with 1/0 labels in the same order.
    pub fn labeled(&self) -> impl Iterator<Item = ((usize, usize), bool)> + '_ {
        self.positives
            .iter()
            .map(|&p| (p, true))
            .chain(self.negatives.iter().map(|&p| (p, false)))
    }
}

/// Samples every edge (or `max_edges` of them) as positives and as many
/// uniformly drawn unconnected pairs as negatives. Pairs are `(i, j)` with `i < j`.
pub fn sample_pairs(g: &Graph, seed: u64, max_edges: usize) -> Result<PairSample> {
    let n = g.num_nodes();
    let mut edges = g.edges();
    if edges.is_empty() {
        return Err(Error::NoPairs("graph has no edges".into()));
    }
    let total_pairs = n * (n - 1) / 2;
    let available = total_pairs - edges.len();
    if available == 0 {
        return Err(Error::NoPairs("graph is complete, no unconnected pairs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if edges.len() > max_edges {
        let mut keep = index::sample(&mut rng, edges.len(), max_edges).into_vec();
        keep.sort_unstable();
        edges = keep.into_iter().map(|k| edges[k]).collect();
    }
    let want = edges.len();

    let negatives = if available >= 2 * want {
        let mut seen = HashSet::with_capacity(want);
        let mut out = Vec::with_capacity(want);
        while out.len() < want {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j {
                continue;
            }
            let p = (i.min(j), i.max(j));
            if !g.has_edge(p.0, p.1) && seen.insert(p) {
                out.push(p);
            }
        }
        out
    } else {
        let mut all: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.has_edge(i, j))
            .collect();
        all.shuffle(&mut rng);
        all.truncate(want);
        all
    };
    let exhausted = negatives.len() < want;
    if exhausted {
        log::warn!(
            "only {} unconnected pairs available for {} positives",
            negatives.len(),
            want
        );
    }
    Ok(PairSample {
        positives: edges,
        negatives,
        seed,
        negatives_exhausted: exhausted,
    })
}

/// The eight prediction-row distances.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Cosine,
    Euclidean,
    Correlation,
    Chebyshev,
    Braycurtis,
    Canberra,
    Cityblock,
    Sqeuclidean,
}

impl Metric {
    pub const ALL: [Metric; 8] = [
        Metric::Cosine,
        Metric::Euclidean,
        Metric::Correlation,
        Metric::Chebyshev,
        Metric::Braycurtis,
        Metric::Canberra,
        Metric::Cityblock,
        Metric::Sqeuclidean,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Cosine => "cosine",
            Metric::Euclidean => "euclidean",
            Metric::Correlation => "correlation",
            Metric::Chebyshev => "chebyshev",
            Metric::Braycurtis => "braycurtis",
            Metric::Canberra => "canberra",
            Metric::Cityblock => "cityblock",
            Metric::Sqeuclidean => "sqeuclidean",
        }
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Metric::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown distance {s:?}")))
    }
}

/// A distance value; `degenerate` marks a zero-norm row under cosine or
/// correlation, where the value is fixed to 1 (or 0 for identical rows).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distance {
    pub value: f64,
    pub degenerate: bool,
}

fn angular(a: &[f64], b: &[f64]) -> Distance {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return Distance {
            value: if a == b { 0.0 } else { 1.0 },
            degenerate: true,
        };
    }
    Distance {
        value: (1.0 - dot / (na * nb)).max(0.0),
        degenerate: false,
    }
}

pub fn pair_distance(a: &[f64], b: &[f64], metric: Metric) -> Distance {
    assert_eq!(a.len(), b.len(), "distance between rows of different length");
    let plain = |value: f64| Distance {
        value,
        degenerate: false,
    };
    if a == b && !matches!(metric, Metric::Cosine | Metric::Correlation) {
        return plain(0.0);
    }
    let diffs = a.iter().zip(b).map(|(x, y)| (x - y).abs());
    match metric {
        Metric::Cosine => {
            if a == b && a.iter().any(|&x| x != 0.0) {
                return plain(0.0);
            }
            angular(a, b)
        }
        Metric::Correlation => {
            let center = |v: &[f64]| {
                let m = v.iter().sum::<f64>() / v.len() as f64;
                v.iter().map(|x| x - m).collect::<Vec<_>>()
            };
            let (ca, cb) = (center(a), center(b));
            if a == b && ca.iter().any(|&x| x != 0.0) {
                return plain(0.0);
            }
            angular(&ca, &cb)
        }
        Metric::Euclidean => plain(diffs.map(|d| d * d).sum::<f64>().sqrt()),
        Metric::Sqeuclidean => plain(diffs.map(|d| d * d).sum()),
        Metric::Chebyshev => plain(diffs.fold(0.0, f64::max)),
        Metric::Cityblock => plain(diffs.sum()),
        Metric::Braycurtis => {
            let den: f64 = a.iter().zip(b).map(|(x, y)| (x + y).abs()).sum();
            let num: f64 = diffs.sum();
            plain(if den == 0.0 { 0.0 } else { num / den })
        }
        Metric::Canberra => plain(
            a.iter()
                .zip(b)
                .map(|(x, y)| {
                    let den = x.abs() + y.abs();
                    if den == 0.0 {
                        0.0
                    } else {
                        (x - y).abs() / den
                    }
                })
                .sum(),
        ),
    }
}

/// Midranks (1-based) of `values` in ascending order.
fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mid = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = mid;
        }
        start = end;
    }
    ranks
}

/// AUC of the rule "smaller distance means connected", by the Mann–Whitney
/// rank formula with midranks for ties.
pub fn attack_auc(distances: &[f64], labels: &[bool]) -> Result<f64> {
    if distances.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} distances, {} labels",
            distances.len(),
            labels.len()
        )));
    }
    let n1 = labels.iter().filter(|&&l| l).count();
    let n0 = labels.len() - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::Degenerate("AUC needs both pair classes".into()));
    }
    if distances.iter().any(|d| d.is_nan()) {
        return Err(Error::InvalidArgument("NaN distance".into()));
    }
    let scores: Vec<f64> = distances.iter().map(|d| -d).collect();
    let ranks = midranks(&scores);
    let r1: f64 = ranks
        .iter()
        .zip(labels)
        .filter(|(_, &l)| l)
        .map(|(r, _)| r)
        .sum();
    let u = r1 - (n1 * (n1 + 1)) as f64 / 2.0;
    Ok(u / (n1 as f64 * n0 as f64))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterSplit {
    /// `true` for pairs assigned to the lower-distance cluster.
    pub connected: Vec<bool>,
    /// All distances were equal, so no split exists.
    pub degenerate: bool,
    pub centers: (f64, f64),
}

/// One-dimensional 2-means seeded at the minimum and maximum; the
/// lower-center cluster is predicted connected and ties go to it.
pub fn cluster_attack(distances: &[f64]) -> Result<ClusterSplit> {
    if distances.len() < 2 {
        return Err(Error::InvalidArgument(
            "cluster attack needs at least two distances".into(),
        ));
    }
    if distances.iter().any(|d| !d.is_finite()) {
        return Err(Error::InvalidArgument("non-finite distance".into()));
    }
    let lo = distances.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = distances.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if lo == hi {
        return Ok(ClusterSplit {
            connected: vec![true; distances.len()],
            degenerate: true,
            centers: (lo, hi),
        });
    }
    let (mut c0, mut c1) = (lo, hi);
    let mut assign: Vec<bool> = Vec::new();
    for _ in 0..10_000 {
        let next: Vec<bool> = distances
            .iter()
            .map(|&d| (d - c0).abs() <= (d - c1).abs())
            .collect();
        if next == assign {
            break;
        }
        assign = next;
        let mean = |want: bool| {
            let (s, k) = distances
                .iter()
                .zip(&assign)
                .filter(|(_, &a)| a == want)
                .fold((0.0, 0usize), |(s, k), (d, _)| (s + d, k + 1));
            s / k as f64
        };
        c0 = mean(true);
        c1 = mean(false);
    }
    Ok(ClusterSplit {
        connected: assign,
        degenerate: false,
        centers: (c0, c1),
    })
}

/// Separation between unconnected (`d0`) and connected (`d1`) distance sets.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskStats {
    pub d0_mean: f64,
    pub d1_mean: f64,
    pub d0_var: f64,
    pub d1_var: f64,
    /// `|d̄0 − d̄1|`.
    pub f_risk: f64,
    /// `2 |d̄0 − d̄1| / (var0 + var1)`; infinite when the variances vanish
    /// but the means differ.
    #[serde(with = "finite_or_null")]
    pub f_risk_normalized: f64,
    /// Both variances were zero.
    pub zero_variance: bool,
}

fn mean_var(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var)
}

/// Risk statistics from raw distance sets, with population variances.
pub fn risk_from_distances(d0: &[f64], d1: &[f64]) -> Result<RiskStats> {
    if d0.is_empty() || d1.is_empty() {
        return Err(Error::Degenerate("risk needs both pair classes".into()));
    }
    let (m0, v0) = mean_var(d0);
    let (m1, v1) = mean_var(d1);
    let f = (m0 - m1).abs();
    let total = v0 + v1;
    let zero_variance = total == 0.0;
    let normalized = if zero_variance {
        if f == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        2.0 * f / total
    };
    Ok(RiskStats {
        d0_mean: m0,
        d1_mean: m1,
        d0_var: v0,
        d1_var: v1,
        f_risk: f,
        f_risk_normalized: normalized,
        zero_variance,
    })
}

/// Distances of the sample's pairs as `(d0, d1)`, plus the count of
/// degenerate evaluations.
pub fn split_distances(
    sample: &PairSample,
    y: &Array2<f64>,
    metric: Metric,
) -> (Vec<f64>, Vec<f64>, usize) {
    let mut degenerate = 0;
    let mut dist = |&(i, j): &(usize, usize)| {
        let d = pair_distance(
            y.row(i).as_slice().expect("standard layout"),
            y.row(j).as_slice().expect("standard layout"),
            metric,
        );
        degenerate += d.degenerate as usize;
        d.value
    };
    let d1: Vec<f64> = sample.positives.iter().map(&mut dist).collect();
    let d0: Vec<f64> = sample.negatives.iter().map(&mut dist).collect();
    (d0, d1, degenerate)
}

pub fn risk(sample: &PairSample, y: &Array2<f64>, metric: Metric) -> Result<RiskStats> {
    let y = y.as_standard_layout();
    let (d0, d1, _) = split_distances(sample, &y.to_owned(), metric);
    risk_from_distances(&d0, &d1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub max_edges: usize,
    pub metrics: Vec<Metric>,
    /// Distance behind the top-level `f_risk` numbers.
    pub risk_metric: Metric,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            max_edges: 10_000,
            metrics: Metric::ALL.to_vec(),
            risk_metric: Metric::Sqeuclidean,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistanceReport {
    pub auc: f64,
    pub d0_mean: f64,
    pub d1_mean: f64,
    pub d0_var: f64,
    pub d1_var: f64,
    pub f_risk: f64,
    #[serde(with = "finite_or_null")]
    pub f_risk_normalized: f64,
    pub cluster_accuracy: f64,
    pub degenerate_pairs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub per_distance: BTreeMap<String, DistanceReport>,
    pub mean_auc: f64,
    pub risk_metric: Metric,
    pub f_risk: f64,
    #[serde(with = "finite_or_null")]
    pub f_risk_normalized: f64,
    pub num_positives: usize,
    pub num_negatives: usize,
    pub negatives_exhausted: bool,
}

/// Runs the attack for every configured distance on one prediction matrix.
pub fn evaluate_attack(
    sample: &PairSample,
    y: &Array2<f64>,
    config: &AttackConfig,
) -> Result<AttackReport> {
    if config.metrics.is_empty() {
        return Err(Error::InvalidArgument("no attack distances configured".into()));
    }
    let y = y.as_standard_layout().to_owned();
    let labels: Vec<bool> = sample.labeled().map(|(_, l)| l).collect();
    let mut per_distance = BTreeMap::new();
    let mut risk_stats = None;
    let mut metrics = config.metrics.clone();
    if !metrics.contains(&config.risk_metric) {
        metrics.push(config.risk_metric);
    }
    for &m in &metrics {
        let (d0, d1, degenerate) = split_distances(sample, &y, m);
        let stats = risk_from_distances(&d0, &d1)?;
        if m == config.risk_metric {
            risk_stats = Some(stats);
        }
        if !config.metrics.contains(&m) {
            continue;
        }
        let all: Vec<f64> = d1.iter().chain(&d0).copied().collect();
        let auc = attack_auc(&all, &labels)?;
        let split = cluster_attack(&all)?;
        let correct = split
            .connected
            .iter()
            .zip(&labels)
            .filter(|(a, b)| a == b)
            .count();
        per_distance.insert(
            m.name().to_string(),
            DistanceReport {
                auc,
                d0_mean: stats.d0_mean,
                d1_mean: stats.d1_mean,
                d0_var: stats.d0_var,
                d1_var: stats.d1_var,
                f_risk: stats.f_risk,
                f_risk_normalized: stats.f_risk_normalized,
                cluster_accuracy: correct as f64 / labels.len() as f64,
                degenerate_pairs: degenerate,
            },
        );
    }
    let mean_auc =
        per_distance.values().map(|r| r.auc).sum::<f64>() / per_distance.len() as f64;
    let rs = risk_stats.expect("risk metric evaluated");
    Ok(AttackReport {
        per_distance,
        mean_auc,
        risk_metric: config.risk_metric,
        f_risk: rs.f_risk,
        f_risk_normalized: rs.f_risk_normalized,
        num_positives: sample.positives.len(),
        num_negatives: sample.negatives.len(),
        negatives_exhausted: sample.negatives_exhausted,
    })
}

/// Serializes non-finite reals as JSON `null`; `null` reads back as +∞.
pub mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}
