//! Individual-fairness bias `Tr(Y^T L_S Y)` and its gradient.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::graph::SimilarityMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub value: f64,
    /// `value / n`, comparable across graph sizes.
    pub normalized_value: f64,
}

fn check_shape(y: &ArrayView2<f64>, s: &SimilarityMatrix) {
    assert_eq!(
        y.nrows(),
        s.num_nodes(),
        "prediction rows must match the similarity matrix size"
    );
}

/// `½ Σ_ij S_ij ‖Y_i − Y_j‖²`, which equals `Tr(Y^T L_S Y)`.
pub fn bias(y: &ArrayView2<f64>, s: &SimilarityMatrix) -> BiasReport {
    check_shape(y, s);
    let mut total = 0.0;
    for (i, j, w) in s.s().triplets() {
        let d2: f64 = y
            .row(i)
            .iter()
            .zip(y.row(j).iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        total += w * d2;
    }
    let value = 0.5 * total;
    let n = y.nrows().max(1) as f64;
    BiasReport {
        value,
        normalized_value: value / n,
    }
}

/// `∂ f_bias / ∂Y = 2 L_S Y`.
pub fn bias_grad_outputs(y: &ArrayView2<f64>, s: &SimilarityMatrix) -> Array2<f64> {
    check_shape(y, s);
    let mut g = s.laplacian_mul(y);
    g *= 2.0;
    g
}
