use ndarray::{Array2, ArrayView2};

use super::Graph;
use crate::sparse::CsrMatrix;

/// Structural Jaccard similarity `S` and its Laplacian `L_S = D_S - S`.
#[derive(Clone, Debug)]
pub struct SimilarityMatrix {
    s: CsrMatrix,
    laplacian: CsrMatrix,
    /// Neighborhoods used for `S` include the node itself.
    pub closed_neighborhoods: bool,
}

impl SimilarityMatrix {
    /// Wraps an arbitrary symmetric nonnegative matrix with zero diagonal.
    pub fn from_matrix(s: CsrMatrix) -> Self {
        let n = s.rows();
        let degrees = s.row_sums();
        let mut trip: Vec<(usize, usize, f64)> =
            s.triplets().map(|(i, j, v)| (i, j, -v)).collect();
        trip.extend((0..n).map(|i| (i, i, degrees[i])));
        let laplacian = CsrMatrix::from_triplets(n, n, &trip);
        SimilarityMatrix {
            s,
            laplacian,
            closed_neighborhoods: true,
        }
    }

    pub fn s(&self) -> &CsrMatrix {
        &self.s
    }

    pub fn laplacian(&self) -> &CsrMatrix {
        &self.laplacian
    }

    pub fn num_nodes(&self) -> usize {
        self.s.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.s.get(i, j)
    }

    /// `x^T L_S x` for a single column.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        let lx = self.laplacian.matvec(x);
        x.iter().zip(&lx).map(|(a, b)| a * b).sum()
    }

    /// `L_S * y`.
    pub fn laplacian_mul(&self, y: &ArrayView2<f64>) -> Array2<f64> {
        self.laplacian.mul_dense(y)
    }
}

/// Jaccard similarity over closed neighborhoods `N(i) ∪ {i}`.
///
/// Only pairs within two hops share a closed-neighborhood element, so the
/// matrix is built by walking two steps from each node. The diagonal is 0.
pub fn jaccard_similarity(g: &Graph) -> SimilarityMatrix {
    let n = g.num_nodes();
    let closed_size: Vec<usize> = (0..n).map(|i| g.degree(i) + 1).collect();
    let mut shared = vec![0usize; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    indptr.push(0);

    for i in 0..n {
        touched.clear();
        // k ranges over N[i]; j over N[k]; each (i, j) visit is one shared element.
        let visit = |k: usize, shared: &mut Vec<usize>, touched: &mut Vec<usize>| {
            for j in std::iter::once(k).chain(g.neighbors(k).iter().copied()) {
                if shared[j] == 0 {
                    touched.push(j);
                }
                shared[j] += 1;
            }
        };
        visit(i, &mut shared, &mut touched);
        for &k in g.neighbors(i) {
            visit(k, &mut shared, &mut touched);
        }
        touched.sort_unstable();
        for &j in &touched {
            if j != i {
                let inter = shared[j];
                let union = closed_size[i] + closed_size[j] - inter;
                indices.push(j);
                values.push(inter as f64 / union as f64);
            }
            shared[j] = 0;
        }
        indptr.push(indices.len());
    }
    SimilarityMatrix::from_matrix(CsrMatrix::from_raw(n, n, indptr, indices, values))
}
