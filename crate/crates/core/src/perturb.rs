//! Edge perturbations: heterophilic edge injection guided by a trained model
//! and the EdgeRand and LapGraph edge-DP mechanisms.
//!
//! A [`Perturbation`] stores `ΔA` as the cells it adds and removes, so the
//! perturbed graph is `A′ = A + ΔA` with entries in `{0, 1}`.

use std::collections::{BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use ndarray::Array2;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gcn::argmax;
use crate::graph::{save_dataset, Graph};
use crate::sparse::CsrMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Pp,
    EdgeRand,
    LapGraph,
}

impl std::fmt::Display for Mechanism {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Mechanism::Pp => "pp",
            Mechanism::EdgeRand => "edge_rand",
            Mechanism::LapGraph => "lap_graph",
        })
    }
}

/// Mechanism parameter: `gamma` for injection, `eps` for the DP mechanisms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbParams {
    Gamma(f64),
    Eps(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Perturbation {
    pub num_nodes: usize,
    /// Cells with `ΔA = +1`, as `(i, j)` with `i < j`, sorted.
    pub added: Vec<(usize, usize)>,
    /// Cells with `ΔA = −1`, as `(i, j)` with `i < j`, sorted.
    pub removed: Vec<(usize, usize)>,
    pub mechanism: Mechanism,
    pub params: PerturbParams,
    pub seed: u64,
    /// Injection ran out of candidates for at least one node.
    pub exhausted: bool,
    /// LapGraph's clamped noisy edge count `Ê`.
    pub noisy_edge_count: Option<usize>,
}

impl Perturbation {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty()
    }

    /// Edge list of `A + ΔA`.
    pub fn perturbed_edges(&self, g: &Graph) -> Result<Vec<(usize, usize)>> {
        if g.num_nodes() != self.num_nodes {
            return Err(Error::Shape(format!(
                "perturbation for {} nodes applied to a graph with {}",
                self.num_nodes,
                g.num_nodes()
            )));
        }
        let removed: HashSet<(usize, usize)> = self.removed.iter().copied().collect();
        let mut edges: BTreeSet<(usize, usize)> = g
            .edges()
            .into_iter()
            .filter(|e| !removed.contains(e))
            .collect();
        edges.extend(self.added.iter().copied());
        Ok(edges.into_iter().collect())
    }

    /// `A + ΔA` with the original features, labels and split.
    pub fn apply(&self, g: &Graph) -> Result<Graph> {
        g.with_edges(&self.perturbed_edges(g)?)
    }

    /// Symmetric `ΔA` with entries in `{−1, 0, 1}`.
    pub fn delta_matrix(&self) -> CsrMatrix {
        let mut trip = Vec::with_capacity(2 * (self.added.len() + self.removed.len()));
        for &(i, j) in &self.added {
            trip.push((i, j, 1.0));
            trip.push((j, i, 1.0));
        }
        for &(i, j) in &self.removed {
            trip.push((i, j, -1.0));
            trip.push((j, i, -1.0));
        }
        CsrMatrix::from_triplets(self.num_nodes, self.num_nodes, &trip)
    }

    pub fn sidecar(&self) -> Sidecar {
        Sidecar {
            mechanism: self.mechanism,
            params: self.params,
            seed: self.seed,
            num_added: self.added.len(),
            num_removed: self.removed.len(),
            exhausted: self.exhausted,
            noisy_edge_count: self.noisy_edge_count,
        }
    }
}

/// Contents of `perturbation.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub mechanism: Mechanism,
    pub params: PerturbParams,
    pub seed: u64,
    pub num_added: usize,
    pub num_removed: usize,
    pub exhausted: bool,
    pub noisy_edge_count: Option<usize>,
}

pub fn write_sidecar(path: impl AsRef<Path>, p: &Perturbation) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, serde_json::to_string_pretty(&p.sidecar())?).map_err(|e| Error::io(path, e))
}

/// Writes the perturbed graph as a dataset directory plus `perturbation.json`.
pub fn save_perturbed(g: &Graph, p: &Perturbation, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    save_dataset(&p.apply(g)?, dir)?;
    write_sidecar(dir.join("perturbation.json"), p)
}

fn ordered(i: usize, j: usize) -> (usize, usize) {
    if i < j {
        (i, j)
    } else {
        (j, i)
    }
}

/// Heterophilic edge injection: each node `i` draws `round(γ·deg(i))` new
/// partners uniformly from the non-adjacent nodes whose predicted class
/// differs from its own. Budgets use the original degrees.
pub fn pp_perturb(g: &Graph, y_pred: &Array2<f64>, gamma: f64, seed: u64) -> Result<Perturbation> {
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::InvalidArgument(format!("gamma must be finite and >= 0, got {gamma}")));
    }
    let n = g.num_nodes();
    if y_pred.nrows() != n {
        return Err(Error::Shape(format!(
            "predictions have {} rows for {n} nodes",
            y_pred.nrows()
        )));
    }
    let classes: Vec<usize> = y_pred.rows().into_iter().map(|r| argmax(r.iter().copied())).collect();
    let budgets: Vec<usize> = (0..n).map(|i| (gamma * g.degree(i) as f64).round() as usize).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut added: BTreeSet<(usize, usize)> = BTreeSet::new();
    let mut exhausted = false;
    for i in 0..n {
        if budgets[i] == 0 {
            continue;
        }
        let candidates: Vec<usize> = (0..n)
            .filter(|&j| {
                j != i
                    && classes[j] != classes[i]
                    && !g.has_edge(i, j)
                    && !added.contains(&ordered(i, j))
            })
            .collect();
        let take = budgets[i].min(candidates.len());
        if take < budgets[i] {
            exhausted = true;
        }
        for k in index::sample(&mut rng, candidates.len(), take) {
            added.insert(ordered(i, candidates[k]));
        }
    }
    if exhausted {
        log::warn!("pp_perturb: some nodes had fewer heterophilic candidates than their budget");
    }
    Ok(Perturbation {
        num_nodes: n,
        added: added.into_iter().collect(),
        removed: Vec::new(),
        mechanism: Mechanism::Pp,
        params: PerturbParams::Gamma(gamma),
        seed,
        exhausted,
        noisy_edge_count: None,
    })
}

fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("eps must be > 0, got {eps}")))
    }
}

fn num_cells(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Uniform unordered pair of distinct nodes.
fn random_cell(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    loop {
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        if i != j {
            return ordered(i, j);
        }
    }
}

/// `count` distinct non-edge cells not in `taken`, uniformly at random.
/// Enumerates when the request is a large share of the free cells.
fn sample_free_cells(
    rng: &mut ChaCha8Rng,
    g: &Graph,
    taken: &HashSet<(usize, usize)>,
    count: usize,
) -> Vec<(usize, usize)> {
    let n = g.num_nodes();
    let free = num_cells(n) - g.num_edges() as u64 - taken.len() as u64;
    debug_assert!(count as u64 <= free);
    if 2 * count as u64 >= free {
        let all: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| !g.has_edge(i, j) && !taken.contains(&(i, j)))
            .collect();
        return index::sample(rng, all.len(), count)
            .into_iter()
            .map(|k| all[k])
            .collect();
    }
    let mut chosen = HashSet::with_capacity(count);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let c = random_cell(rng, n);
        if !g.has_edge(c.0, c.1) && !taken.contains(&c) && chosen.insert(c) {
            out.push(c);
        }
    }
    out
}

/// Randomized response on every upper-triangular cell: kept with
/// probability `e^ε/(1+e^ε)`, flipped otherwise. Non-edge flips are drawn as
/// a binomial count followed by uniform positions.
pub fn edge_rand(g: &Graph, eps: f64, seed: u64) -> Result<Perturbation> {
    check_eps(eps)?;
    let n = g.num_nodes();
    let p_flip = 1.0 / (1.0 + eps.exp());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let removed: Vec<(usize, usize)> = g
        .edges()
        .into_iter()
        .filter(|_| rng.random_bool(p_flip))
        .collect();
    let free = num_cells(n) - g.num_edges() as u64;
    let flips = Binomial::new(free, p_flip)
        .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?
        .sample(&mut rng) as usize;
    let mut added = sample_free_cells(&mut rng, g, &HashSet::new(), flips);
    added.sort_unstable();
    Ok(Perturbation {
        num_nodes: n,
        added,
        removed,
        mechanism: Mechanism::EdgeRand,
        params: PerturbParams::Eps(eps),
        seed,
        exhausted: false,
        noisy_edge_count: None,
    })
}

/// Inverse survival function of Laplace(0, b).
fn laplace_isf(s: f64, b: f64) -> f64 {
    if s <= 0.5 {
        -b * (2.0 * s).ln()
    } else {
        b * (2.0 * (1.0 - s)).ln()
    }
}

fn laplace(rng: &mut ChaCha8Rng, b: f64) -> f64 {
    // Open interval keeps both logarithms finite.
    let s: f64 = rng.random_range(f64::MIN_POSITIVE..1.0);
    laplace_isf(s, b)
}

/// Share of the budget spent on the noisy edge count.
pub const LAPGRAPH_COUNT_SHARE: f64 = 0.01;

/// Laplace noise on every upper-triangular cell, keeping the `Ê` largest
/// noisy cells where `Ê = |E| + Lap(1/(0.01ε))`. Non-edge noise is generated
/// lazily from the top down in bands of geometrically growing tail mass.
pub fn lap_graph(g: &Graph, eps: f64, seed: u64) -> Result<Perturbation> {
    check_eps(eps)?;
    let n = g.num_nodes();
    let total = num_cells(n);
    let b_count = 1.0 / (LAPGRAPH_COUNT_SHARE * eps);
    let b_cell = 1.0 / ((1.0 - LAPGRAPH_COUNT_SHARE) * eps);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e_hat = (g.num_edges() as f64 + laplace(&mut rng, b_count))
        .round()
        .clamp(0.0, total as f64) as usize;

    let edges = g.edges();
    let mut scored: Vec<(f64, (usize, usize))> = edges
        .iter()
        .map(|&e| (1.0 + laplace(&mut rng, b_cell), e))
        .collect();
    let free = total - edges.len() as u64;
    let mut taken: HashSet<(usize, usize)> = HashSet::new();
    // Non-edge values above `lo` are all known; bands are (lo, hi].
    let mut s_hi = 0.0f64;
    let mut s_lo = ((2 * e_hat + 32) as f64 / free.max(1) as f64).min(1.0);
    loop {
        let remaining = free - taken.len() as u64;
        let band = if s_hi < 1.0 { (s_lo - s_hi) / (1.0 - s_hi) } else { 0.0 };
        let k = if remaining == 0 || band <= 0.0 {
            0
        } else {
            Binomial::new(remaining, band.min(1.0))
                .map_err(|e| Error::InvalidArgument(format!("binomial: {e}")))?
                .sample(&mut rng) as usize
        };
        let cells = sample_free_cells(&mut rng, g, &taken, k);
        for c in cells {
            let s = rng.random_range(s_hi..s_lo).max(f64::MIN_POSITIVE);
            scored.push((laplace_isf(s, b_cell), c));
            taken.insert(c);
        }
        let lo = if s_lo >= 1.0 { f64::NEG_INFINITY } else { laplace_isf(s_lo, b_cell) };
        let known = scored.iter().filter(|(v, _)| *v > lo).count();
        if known >= e_hat || s_lo >= 1.0 {
            break;
        }
        s_hi = s_lo;
        s_lo = (2.0 * s_lo).min(1.0);
    }
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    scored.truncate(e_hat);
    let kept: HashSet<(usize, usize)> = scored.into_iter().map(|(_, c)| c).collect();
    let removed: Vec<(usize, usize)> = edges.iter().copied().filter(|e| !kept.contains(e)).collect();
    let mut added: Vec<(usize, usize)> = kept.into_iter().filter(|&(i, j)| !g.has_edge(i, j)).collect();
    added.sort_unstable();
    Ok(Perturbation {
        num_nodes: n,
        added,
        removed,
        mechanism: Mechanism::LapGraph,
        params: PerturbParams::Eps(eps),
        seed,
        exhausted: false,
        noisy_edge_count: Some(e_hat),
    })
}

#[cfg(test)]
mod tests;
