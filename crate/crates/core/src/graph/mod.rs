//! Graph data model and structural queries.

mod dataset;
mod hops;
mod sbm;
mod similarity;

pub use dataset::{load_dataset, save_dataset, write_edges, DatasetMeta};
pub use hops::{hop_distance, theoretical_ratio, two_hop_ratio, HopClass};
pub use sbm::{generate_sbm, SbmParams};
pub use similarity::{jaccard_similarity, SimilarityMatrix};

use std::collections::BTreeSet;

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Undirected, unweighted attributed graph with a node-classification split.
#[derive(Clone, Debug)]
pub struct Graph {
    adjacency: CsrMatrix,
    features: Array2<f64>,
    labels: Vec<Option<usize>>,
    num_classes: usize,
    train: Vec<usize>,
    val: Vec<usize>,
    test: Vec<usize>,
}

/// Which normalization of `A + I` to build.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Normalization {
    /// `D^-1/2 (A + I) D^-1/2`
    Symmetric,
    /// `D^-1 (A + I)`
    Left,
}

impl Graph {
    /// Builds a graph from an undirected edge list. Edges are symmetrized and
    /// deduplicated; self-loops are dropped.
    #[allow(clippy::too_many_arguments)]
    pub fn from_edges(
        num_nodes: usize,
        edges: &[(usize, usize)],
        features: Array2<f64>,
        labels: Vec<Option<usize>>,
        num_classes: usize,
        train: Vec<usize>,
        val: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= num_nodes {
                    return Err(Error::NodeOutOfRange {
                        index: x,
                        n: num_nodes,
                    });
                }
            }
        }
        let adjacency = adjacency_from_edges(num_nodes, edges);
        let g = Graph {
            adjacency,
            features,
            labels,
            num_classes,
            train,
            val,
            test,
        };
        g.validate()?;
        Ok(g)
    }

    /// Checks every structural invariant of the type.
    pub fn validate(&self) -> Result<()> {
        let n = self.num_nodes();
        if self.adjacency.rows() != n || self.adjacency.cols() != n {
            return Err(Error::InvalidGraph("adjacency is not n x n".into()));
        }
        if self.features.nrows() != n {
            return Err(Error::Shape(format!(
                "features have {} rows, graph has {n} nodes",
                self.features.nrows()
            )));
        }
        if self.labels.len() != n {
            return Err(Error::InvalidGraph(format!(
                "label count {} does not match node count {n}",
                self.labels.len()
            )));
        }
        for i in 0..n {
            for &j in self.adjacency.row_indices(i) {
                if i == j {
                    return Err(Error::InvalidGraph(format!("self-loop on node {i}")));
                }
                if self.adjacency.get(j, i) != 1.0 {
                    return Err(Error::InvalidGraph(format!("edge {i}-{j} is not symmetric")));
                }
            }
        }
        for (i, l) in self.labels.iter().enumerate() {
            if let Some(c) = l {
                if *c >= self.num_classes {
                    return Err(Error::InvalidGraph(format!(
                        "node {i} has label {c} >= num_classes {}",
                        self.num_classes
                    )));
                }
            }
        }
        let mut seen = BTreeSet::new();
        for (name, mask) in [("train", &self.train), ("val", &self.val), ("test", &self.test)] {
            for &v in mask {
                if v >= n {
                    return Err(Error::NodeOutOfRange { index: v, n });
                }
                if !seen.insert(v) {
                    return Err(Error::InvalidGraph(format!(
                        "node {v} appears twice across masks (in {name})"
                    )));
                }
            }
        }
        if let Some(&v) = self.train.iter().find(|&&v| self.labels[v].is_none()) {
            return Err(Error::InvalidGraph(format!("train node {v} has no label")));
        }
        Ok(())
    }

    pub fn num_nodes(&self) -> usize {
        self.labels.len()
    }

    /// Number of undirected edges.
    pub fn num_edges(&self) -> usize {
        self.adjacency.nnz() / 2
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_dim(&self) -> usize {
        self.features.ncols()
    }

    pub fn adjacency(&self) -> &CsrMatrix {
        &self.adjacency
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn labels(&self) -> &[Option<usize>] {
        &self.labels
    }

    pub fn train_nodes(&self) -> &[usize] {
        &self.train
    }

    pub fn val_nodes(&self) -> &[usize] {
        &self.val
    }

    pub fn test_nodes(&self) -> &[usize] {
        &self.test
    }

    /// Open neighborhood, sorted.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        self.adjacency.row_indices(i)
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors(i).len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.num_nodes()).map(|i| self.degree(i)).collect()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.neighbors(i).binary_search(&j).is_ok()
    }

    /// Undirected edges as `(i, j)` with `i < j`, in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.num_nodes())
            .flat_map(|i| {
                self.neighbors(i)
                    .iter()
                    .filter(move |&&j| j > i)
                    .map(move |&j| (i, j))
            })
            .collect()
    }

    /// Same nodes, features, labels and split; different edge set.
    pub fn with_edges(&self, edges: &[(usize, usize)]) -> Result<Graph> {
        Graph::from_edges(
            self.num_nodes(),
            edges,
            self.features.clone(),
            self.labels.clone(),
            self.num_classes,
            self.train.clone(),
            self.val.clone(),
            self.test.clone(),
        )
    }

    /// Same graph with a replaced split.
    pub fn with_split(&self, train: Vec<usize>, val: Vec<usize>, test: Vec<usize>) -> Result<Graph> {
        let g = Graph {
            train,
            val,
            test,
            ..self.clone()
        };
        g.validate()?;
        Ok(g)
    }

    /// Normalized propagation matrix of `A + I`. Isolated nodes keep a
    /// self-loop of weight 1.
    pub fn normalized_adjacency(&self, mode: Normalization) -> CsrMatrix {
        let n = self.num_nodes();
        let deg: Vec<f64> = (0..n).map(|i| self.degree(i) as f64 + 1.0).collect();
        let mut indptr = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(self.adjacency.nnz() + n);
        let mut values = Vec::with_capacity(self.adjacency.nnz() + n);
        indptr.push(0);
        for i in 0..n {
            let nb = self.neighbors(i);
            let split = nb.partition_point(|&j| j < i);
            let cols = nb[..split]
                .iter()
                .copied()
                .chain(std::iter::once(i))
                .chain(nb[split..].iter().copied());
            for j in cols {
                let w = match mode {
                    Normalization::Symmetric => 1.0 / (deg[i] * deg[j]).sqrt(),
                    Normalization::Left => 1.0 / deg[i],
                };
                indices.push(j);
                values.push(w);
            }
            indptr.push(indices.len());
        }
        CsrMatrix::from_raw(n, n, indptr, indices, values)
    }
}

pub(crate) fn adjacency_from_edges(n: usize, edges: &[(usize, usize)]) -> CsrMatrix {
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(u, v) in edges {
        if u != v {
            rows[u].push(v);
            rows[v].push(u);
        }
    }
    let mut indptr = Vec::with_capacity(n + 1);
    let mut indices = Vec::new();
    indptr.push(0);
    for row in &mut rows {
        row.sort_unstable();
        row.dedup();
        indices.extend_from_slice(row);
        indptr.push(indices.len());
    }
    let values = vec![1.0; indices.len()];
    CsrMatrix::from_raw(n, n, indptr, indices, values)
}
