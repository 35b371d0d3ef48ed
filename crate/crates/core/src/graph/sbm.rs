use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Stochastic block model with Gaussian class-conditional features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SbmParams {
    pub n: usize,
    /// Intra-class link probability.
    pub p: f64,
    /// Inter-class link probability.
    pub q: f64,
    pub num_classes: usize,
    pub feature_dim: usize,
    /// Norm of each class mean; class `c` is centered on `sep * e_(c mod k)`.
    pub class_mean_separation: f64,
    /// Per-coordinate feature noise standard deviation.
    pub feature_noise: f64,
    pub train_fraction: f64,
    pub val_fraction: f64,
}

impl SbmParams {
    pub fn new(n: usize, p: f64, q: f64, num_classes: usize) -> Self {
        SbmParams {
            n,
            p,
            q,
            num_classes,
            feature_dim: 16,
            class_mean_separation: 1.0,
            feature_noise: 1.0,
            train_fraction: 0.3,
            val_fraction: 0.2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if !(0.0..=1.0).contains(&self.p) || !(0.0..=self.p).contains(&self.q) {
            return bad(format!("need 0 <= q <= p <= 1 (got p = {}, q = {})", self.p, self.q));
        }
        if self.num_classes == 0 || self.n < self.num_classes {
            return bad(format!(
                "need 1 <= num_classes <= n (got {} classes, n = {})",
                self.num_classes, self.n
            ));
        }
        if self.feature_dim == 0 {
            return bad("feature_dim must be positive".into());
        }
        if self.train_fraction <= 0.0
            || self.val_fraction < 0.0
            || self.train_fraction + self.val_fraction > 1.0
        {
            return bad(format!(
                "bad split fractions: train {}, val {}",
                self.train_fraction, self.val_fraction
            ));
        }
        Ok(())
    }

    /// `q < p`, the homophily assumption behind the trade-off analysis.
    pub fn is_homophilous(&self) -> bool {
        self.q < self.p
    }

    /// Class of node `i`: contiguous, near-equal blocks.
    pub fn class_of(&self, i: usize) -> usize {
        i * self.num_classes / self.n
    }
}

/// Samples a graph; identical `(params, seed)` give identical graphs.
pub fn generate_sbm(params: &SbmParams, seed: u64) -> Result<Graph> {
    params.validate()?;
    let n = params.n;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let class: Vec<usize> = (0..n).map(|i| params.class_of(i)).collect();

    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let prob = if class[i] == class[j] { params.p } else { params.q };
            if prob > 0.0 && rng.random::<f64>() < prob {
                edges.push((i, j));
            }
        }
    }

    let k = params.feature_dim;
    let mut features = Array2::<f64>::zeros((n, k));
    for i in 0..n {
        for d in 0..k {
            let z: f64 = rng.sample(StandardNormal);
            features[[i, d]] = params.feature_noise * z;
        }
        features[[i, class[i] % k]] += params.class_mean_separation;
    }

    let mut train = Vec::new();
    let mut val = Vec::new();
    let mut test = Vec::new();
    for c in 0..params.num_classes {
        let mut members: Vec<usize> = (0..n).filter(|&i| class[i] == c).collect();
        members.shuffle(&mut rng);
        let m = members.len();
        let n_train = ((params.train_fraction * m as f64).round() as usize).clamp(1, m);
        let n_val = ((params.val_fraction * m as f64).round() as usize).min(m - n_train);
        train.extend_from_slice(&members[..n_train]);
        val.extend_from_slice(&members[n_train..n_train + n_val]);
        test.extend_from_slice(&members[n_train + n_val..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();

    Graph::from_edges(
        n,
        &edges,
        features,
        class.into_iter().map(Some).collect(),
        params.num_classes,
        train,
        val,
        test,
    )
}
