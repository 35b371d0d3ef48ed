//! Fixtures shared by unit tests.

use crate::graph::{generate_sbm, Graph, SbmParams};

/// 20-node, two-class SBM with 5 features and half the nodes in train.
pub fn small_sbm(seed: u64) -> Graph {
    let mut p = SbmParams::new(20, 0.3, 0.05, 2);
    p.feature_dim = 5;
    p.train_fraction = 0.5;
    generate_sbm(&p, seed).unwrap()
}

/// Largest entrywise relative error between `analytic` and central
/// differences of `f` at step `h`. Entries far below the gradient's scale
/// are measured against 1% of its largest entry, since their difference
/// quotients are dominated by rounding in `f`.
pub fn max_fd_error(f: impl Fn(&[f64]) -> f64, theta: &[f64], analytic: &[f64], h: f64) -> f64 {
    let floor = 1e-2 * analytic.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let mut tp = theta.to_vec();
        tp[i] += h;
        let mut tm = theta.to_vec();
        tm[i] -= h;
        let fd = (f(&tp) - f(&tm)) / (2.0 * h);
        let denom = analytic[i].abs().max(fd.abs()).max(floor).max(1e-12);
        worst = worst.max((analytic[i] - fd).abs() / denom);
    }
    worst
}
