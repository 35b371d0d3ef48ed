use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};

/// Shortest-path length class of a node pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum HopClass {
    Finite(usize),
    /// Disconnected, or farther than the search cap.
    Infinite,
}

impl HopClass {
    pub fn is_edge(self) -> bool {
        self == HopClass::Finite(1)
    }
}

/// BFS distance between `i` and `j`, truncated at `cap` hops.
pub fn hop_distance(g: &Graph, i: usize, j: usize, cap: usize) -> Result<HopClass> {
    let n = g.num_nodes();
    for v in [i, j] {
        if v >= n {
            return Err(Error::NodeOutOfRange { index: v, n });
        }
    }
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "hop distance of node {i} to itself"
        )));
    }
    if g.has_edge(i, j) {
        return Ok(HopClass::Finite(1));
    }
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    dist[i] = 0;
    queue.push_back(i);
    while let Some(u) = queue.pop_front() {
        if dist[u] >= cap {
            break;
        }
        for &w in g.neighbors(u) {
            if dist[w] == usize::MAX {
                dist[w] = dist[u] + 1;
                if w == j {
                    return Ok(HopClass::Finite(dist[w]));
                }
                queue.push_back(w);
            }
        }
    }
    Ok(HopClass::Infinite)
}

/// Fraction of unconnected (ordered) node pairs that are exactly two hops apart.
pub fn two_hop_ratio(g: &Graph) -> Result<f64> {
    let n = g.num_nodes();
    let mut mark = vec![usize::MAX; n];
    let mut two_hop = 0usize;
    for i in 0..n {
        mark[i] = i;
        for &k in g.neighbors(i) {
            mark[k] = i;
        }
        for &k in g.neighbors(i) {
            for &j in g.neighbors(k) {
                if mark[j] != i {
                    mark[j] = i;
                    two_hop += 1;
                }
            }
        }
    }
    let unconnected = n * n.saturating_sub(1) - 2 * g.num_edges();
    if unconnected == 0 {
        return Err(Error::Degenerate("graph has no unconnected pairs".into()));
    }
    Ok(two_hop as f64 / unconnected as f64)
}

/// Closed-form two-hop share `(p+q)^2 / (1 - (p+q))` for a sparse,
/// homophilous two-class graph.
pub fn theoretical_ratio(p: f64, q: f64) -> Result<f64> {
    let s = p + q;
    if !(p >= 0.0 && q >= 0.0) || s >= 1.0 {
        return Err(Error::InvalidArgument(format!(
            "theoretical two-hop ratio needs p, q >= 0 and p + q < 1 (got p = {p}, q = {q})"
        )));
    }
    Ok(s * s / (1.0 - s))
}
