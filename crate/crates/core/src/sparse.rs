//! Minimal compressed-sparse-row matrix used for adjacency, similarity and
//! Laplacian operators.

use ndarray::{Array2, ArrayView2};

#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds a matrix from `(row, col, value)` triplets. Duplicate
    /// coordinates are summed; column indices within a row end up sorted.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; rows + 1];
        for &(r, c, _) in triplets {
            assert!(r < rows && c < cols, "triplet ({r}, {c}) outside {rows}x{cols}");
            counts[r + 1] += 1;
        }
        for i in 0..rows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut idx = vec![0usize; triplets.len()];
        let mut val = vec![0.0; triplets.len()];
        for &(r, c, v) in triplets {
            let slot = next[r];
            idx[slot] = c;
            val[slot] = v;
            next[r] += 1;
        }

        let mut indptr = Vec::with_capacity(rows + 1);
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        indptr.push(0);
        let mut row_buf: Vec<(usize, f64)> = Vec::new();
        for r in 0..rows {
            row_buf.clear();
            row_buf.extend((counts[r]..counts[r + 1]).map(|k| (idx[k], val[k])));
            row_buf.sort_unstable_by_key(|&(c, _)| c);
            for &(c, v) in &row_buf {
                match indices.last() {
                    Some(&last) if indices.len() > indptr[r] && last == c => {
                        *values.last_mut().unwrap() += v;
                    }
                    _ => {
                        indices.push(c);
                        values.push(v);
                    }
                }
            }
            indptr.push(indices.len());
        }
        CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    /// Raw constructor; rows must hold strictly increasing column indices.
    pub fn from_raw(
        rows: usize,
        cols: usize,
        indptr: Vec<usize>,
        indices: Vec<usize>,
        values: Vec<f64>,
    ) -> Self {
        debug_assert_eq!(indptr.len(), rows + 1);
        debug_assert_eq!(indices.len(), values.len());
        debug_assert!((0..rows).all(|r| {
            indices[indptr[r]..indptr[r + 1]]
                .windows(2)
                .all(|w| w[0] < w[1])
        }));
        CsrMatrix {
            rows,
            cols,
            indptr,
            indices,
            values,
        }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            rows: n,
            cols: n,
            indptr: (0..=n).collect(),
            indices: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row_indices(&self, r: usize) -> &[usize] {
        &self.indices[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn row_values(&self, r: usize) -> &[f64] {
        &self.values[self.indptr[r]..self.indptr[r + 1]]
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.row_indices(r)
            .iter()
            .copied()
            .zip(self.row_values(r).iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        let cols = self.row_indices(r);
        match cols.binary_search(&c) {
            Ok(k) => self.row_values(r)[k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.rows).map(|r| self.row_values(r).iter().sum()).collect()
    }

    /// Iterates over all stored entries as `(row, col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.rows).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows == self.cols
            && self
                .triplets()
                .all(|(r, c, v)| (self.get(c, r) - v).abs() <= tol)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let t: Vec<(usize, usize, f64)> = self.triplets().map(|(r, c, v)| (c, r, v)).collect();
        CsrMatrix::from_triplets(self.cols, self.rows, &t)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols);
        (0..self.rows)
            .map(|r| self.row(r).map(|(c, v)| v * x[c]).sum())
            .collect()
    }

    /// `self * dense`.
    pub fn mul_dense(&self, dense: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(dense.nrows(), self.cols, "sparse-dense inner dimension");
        let k = dense.ncols();
        let mut out = Array2::<f64>::zeros((self.rows, k));
        for r in 0..self.rows {
            let mut out_row = out.row_mut(r);
            for (c, v) in self.row(r) {
                out_row.scaled_add(v, &dense.row(c));
            }
        }
        out
    }

    /// `self^T * dense`, without materializing the transpose.
    pub fn transpose_mul_dense(&self, dense: &ArrayView2<f64>) -> Array2<f64> {
        assert_eq!(dense.nrows(), self.rows, "sparse^T-dense inner dimension");
        let k = dense.ncols();
        let mut out = Array2::<f64>::zeros((self.cols, k));
        for r in 0..self.rows {
            let src = dense.row(r);
            for (c, v) in self.row(r) {
                out.row_mut(c).scaled_add(v, &src);
            }
        }
        out
    }

    pub fn to_dense(&self) -> Array2<f64> {
        let mut out = Array2::zeros((self.rows, self.cols));
        for (r, c, v) in self.triplets() {
            out[[r, c]] += v;
        }
        out
    }
}
