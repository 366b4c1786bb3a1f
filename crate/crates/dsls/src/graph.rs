//! Sensor communication topology and consensus weights.
//!
//! A network is an undirected graph on `n` nodes together with a symmetric,
//! doubly stochastic, nonnegative weight matrix `A` whose support is the edge
//! set plus the diagonal. Every consensus recursion in this crate mixes
//! neighbor quantities through `A`, so the invariants here (symmetry, row
//! sums, nonnegativity, zero off-support entries) are what make the rest of
//! the pipeline meaningful.
//!
//! Edge lists in the public constructors use 1-based node ids, matching the
//! JSON config format; all other methods take 0-based indices.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use std::collections::BTreeSet;
use std::collections::VecDeque;

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct NetworkGraph {
    n: usize,
    /// Normalized (lo, hi) pairs, 0-based, no self-loops.
    edges: BTreeSet<(usize, usize)>,
    /// Sorted neighbor lists including the node itself.
    neighborhoods: Vec<Vec<usize>>,
    adjacency: DMatrix<f64>,
}

fn normalize_edges(n: usize, edges: &[(usize, usize)]) -> Result<BTreeSet<(usize, usize)>> {
    let mut set = BTreeSet::new();
    for &(u, v) in edges {
        if u == 0 || v == 0 || u > n || v > n {
            return Err(Error::Config(format!(
                "graph.edges: edge ({u}, {v}) references a node outside 1..={n}"
            )));
        }
        if u == v {
            return Err(Error::Config(format!(
                "graph.edges: self-loop ({u}, {v}) not allowed; self-weights are implicit"
            )));
        }
        let key = (u.min(v) - 1, u.max(v) - 1);
        if !set.insert(key) {
            return Err(Error::Config(format!(
                "graph.edges: duplicate edge ({u}, {v})"
            )));
        }
    }
    Ok(set)
}

fn neighborhoods_of(n: usize, edges: &BTreeSet<(usize, usize)>) -> Vec<Vec<usize>> {
    let mut nbrs: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
    for &(u, v) in edges {
        nbrs[u].push(v);
        nbrs[v].push(u);
    }
    for list in &mut nbrs {
        list.sort_unstable();
    }
    nbrs
}

impl NetworkGraph {
    /// Build a graph with Metropolis weights: for an edge `{i, j}` the weight
    /// is `1 / max(|N_i|, |N_j|)` where neighborhoods include the node itself,
    /// and each diagonal entry absorbs the remaining mass so rows sum to one.
    /// Edge ids are 1-based.
    pub fn metropolis(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("graph.n: must be >= 1".into()));
        }
        let edge_set = normalize_edges(n, edges)?;
        let neighborhoods = neighborhoods_of(n, &edge_set);
        let mut a = DMatrix::<f64>::zeros(n, n);
        for &(u, v) in &edge_set {
            let w = 1.0 / neighborhoods[u].len().max(neighborhoods[v].len()) as f64;
            a[(u, v)] = w;
            a[(v, u)] = w;
        }
        for i in 0..n {
            let off: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
            a[(i, i)] = 1.0 - off;
        }
        Ok(Self {
            n,
            edges: edge_set,
            neighborhoods,
            adjacency: a,
        })
    }

    /// Edgeless graph with identity weights. Each sensor mixes only with
    /// itself; this is the non-cooperative topology.
    pub fn identity(n: usize) -> Result<Self> {
        Self::metropolis(n, &[])
    }

    /// Build a graph from an explicit weight matrix, validating that it is a
    /// legal consensus matrix for the given edge set: exact symmetry,
    /// nonnegative entries, zeros off the support, row sums within 1e-12 of 1.
    pub fn with_adjacency(n: usize, edges: &[(usize, usize)], a: DMatrix<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("graph.n: must be >= 1".into()));
        }
        if a.nrows() != n || a.ncols() != n {
            return Err(Error::Config(format!(
                "graph.adjacency: expected {n}x{n}, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        let edge_set = normalize_edges(n, edges)?;
        for i in 0..n {
            let mut row_sum = 0.0;
            for j in 0..n {
                let w = a[(i, j)];
                if w < 0.0 {
                    return Err(Error::Config(format!(
                        "graph.adjacency: negative weight {w} at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                if i != j && w != a[(j, i)] {
                    return Err(Error::Config(format!(
                        "graph.adjacency: not symmetric at ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                let key = (i.min(j), i.max(j));
                if i != j && w != 0.0 && !edge_set.contains(&key) {
                    return Err(Error::Config(format!(
                        "graph.adjacency: nonzero weight at non-edge ({}, {})",
                        i + 1,
                        j + 1
                    )));
                }
                row_sum += w;
            }
            if (row_sum - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::Config(format!(
                    "graph.adjacency: row {} sums to {row_sum}, expected 1",
                    i + 1
                )));
            }
        }
        let neighborhoods = neighborhoods_of(n, &edge_set);
        Ok(Self {
            n,
            edges: edge_set,
            neighborhoods,
            adjacency: a,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// Neighbors of `i` (0-based), including `i` itself, ascending.
    pub fn neighborhood(&self, i: usize) -> &[usize] {
        &self.neighborhoods[i]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(u) = queue.pop_front() {
            for &v in &self.neighborhoods[u] {
                if !seen[v] {
                    seen[v] = true;
                    count += 1;
                    queue.push_back(v);
                }
            }
        }
        count == self.n
    }

    /// Graph diameter in hops: the longest shortest path over all node pairs.
    /// A single node has diameter 0. Errors if the graph is disconnected,
    /// since every distributed recursion here assumes a connected network.
    pub fn diameter(&self) -> Result<usize> {
        let mut diam = 0usize;
        for start in 0..self.n {
            let mut dist = vec![usize::MAX; self.n];
            dist[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.neighborhoods[u] {
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        queue.push_back(v);
                    }
                }
            }
            for &d in &dist {
                if d == usize::MAX {
                    return Err(Error::Config(
                        "graph: the communication graph must be connected".into(),
                    ));
                }
                diam = diam.max(d);
            }
        }
        Ok(diam)
    }

    /// `A^l` by repeated multiplication; `l = 0` gives the identity. Small
    /// powers of small matrices, so no memoization.
    pub fn adjacency_power(&self, l: usize) -> DMatrix<f64> {
        let mut out = DMatrix::<f64>::identity(self.n, self.n);
        for _ in 0..l {
            out = &out * &self.adjacency;
        }
        out
    }

    /// Smallest entry of `A^l`. Strictly positive at `l = diameter` for a
    /// connected graph with positive self-weights, which is what the delayed
    /// excitation ledger relies on.
    pub fn min_power_entry(&self, l: usize) -> f64 {
        self.adjacency_power(l).min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn ring(n: usize) -> Vec<(usize, usize)> {
        (1..=n).map(|i| (i, i % n + 1)).collect()
    }

    #[test]
    fn two_node_metropolis() {
        let g = NetworkGraph::metropolis(2, &[(1, 2)]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(g.weight(i, j), 0.5);
            }
        }
    }

    #[test]
    fn single_node() {
        let g = NetworkGraph::metropolis(1, &[]).unwrap();
        assert_eq!(g.weight(0, 0), 1.0);
        assert_eq!(g.diameter().unwrap(), 0);
        assert!(g.is_connected());
    }

    #[test]
    fn three_node_star() {
        // Center 1 has |N| = 3, leaves have |N| = 2.
        let g = NetworkGraph::metropolis(3, &[(1, 2), (1, 3)]).unwrap();
        assert_abs_diff_eq!(g.weight(0, 0), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.weight(0, 1), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.weight(0, 2), 1.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(g.weight(1, 1), 2.0 / 3.0, epsilon = 1e-15);
        assert_eq!(g.weight(1, 2), 0.0);
        assert_eq!(g.diameter().unwrap(), 2);
    }

    #[test]
    fn ring_six_is_uniform_third() {
        // Every node has self-inclusive degree 3, so all edge and self
        // weights collapse to 1/3.
        let g = NetworkGraph::metropolis(6, &ring(6)).unwrap();
        for i in 0..6 {
            assert_abs_diff_eq!(g.weight(i, i), 1.0 / 3.0, epsilon = 1e-15);
            assert_abs_diff_eq!(g.weight(i, (i + 1) % 6), 1.0 / 3.0, epsilon = 1e-15);
        }
        assert_eq!(g.diameter().unwrap(), 3);
    }

    #[test]
    fn ring_six_power_at_diameter_is_positive() {
        let g = NetworkGraph::metropolis(6, &ring(6)).unwrap();
        // A^2 still has zeros (opposite nodes unreachable in 2 hops) ...
        assert_eq!(g.min_power_entry(2), 0.0);
        // ... while A^3 is strictly positive with min entry 2/27.
        let min3 = g.min_power_entry(3);
        assert!(min3 > 0.0);
        assert_abs_diff_eq!(min3, 2.0 / 27.0, epsilon = 1e-15);
    }

    #[test]
    fn adjacency_power_basics() {
        let g = NetworkGraph::metropolis(2, &[(1, 2)]).unwrap();
        assert_eq!(g.adjacency_power(0), DMatrix::identity(2, 2));
        // The 2-node matrix is idempotent: A^2 = A.
        let a2 = g.adjacency_power(2);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(a2[(i, j)], 0.5, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn identity_graph() {
        let g = NetworkGraph::identity(3).unwrap();
        assert_eq!(g.adjacency(), &DMatrix::identity(3, 3));
        assert!(!g.is_connected());
        assert!(g.diameter().is_err());
        assert_eq!(g.neighborhood(1), &[1]);
    }

    #[test]
    fn path_graph_diameter() {
        let g = NetworkGraph::metropolis(4, &[(1, 2), (2, 3), (3, 4)]).unwrap();
        assert_eq!(g.diameter().unwrap(), 3);
        let complete = NetworkGraph::metropolis(3, &[(1, 2), (1, 3), (2, 3)]).unwrap();
        assert_eq!(complete.diameter().unwrap(), 1);
    }

    #[test]
    fn bad_edges_rejected() {
        assert!(NetworkGraph::metropolis(3, &[(1, 4)]).is_err());
        assert!(NetworkGraph::metropolis(3, &[(0, 1)]).is_err());
        assert!(NetworkGraph::metropolis(3, &[(2, 2)]).is_err());
        assert!(NetworkGraph::metropolis(3, &[(1, 2), (2, 1)]).is_err());
        assert!(NetworkGraph::metropolis(0, &[]).is_err());
    }

    #[test]
    fn explicit_adjacency_validation() {
        let a = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5, 0.5]);
        assert!(NetworkGraph::with_adjacency(2, &[(1, 2)], a.clone()).is_ok());
        // Nonzero entry on a non-edge.
        assert!(NetworkGraph::with_adjacency(2, &[], a).is_err());
        // Rows that do not sum to one.
        let bad = DMatrix::from_row_slice(2, 2, &[0.5, 0.4, 0.4, 0.5]);
        assert!(NetworkGraph::with_adjacency(2, &[(1, 2)], bad).is_err());
        // Asymmetric weights.
        let asym = DMatrix::from_row_slice(2, 2, &[0.5, 0.5, 0.5 + 1e-13, 0.5 - 1e-13]);
        assert!(NetworkGraph::with_adjacency(2, &[(1, 2)], asym).is_err());
        // Negative weight.
        let neg = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, -0.5, 1.5]);
        assert!(NetworkGraph::with_adjacency(2, &[(1, 2)], neg).is_err());
    }

    #[test]
    fn row_sums_and_stochastic_powers() {
        let g = NetworkGraph::metropolis(6, &ring(6)).unwrap();
        for l in 0..=20 {
            let p = g.adjacency_power(l);
            for i in 0..6 {
                let s: f64 = (0..6).map(|j| p[(i, j)]).sum();
                assert_abs_diff_eq!(s, 1.0, epsilon = 1e-10);
                for j in 0..6 {
                    assert!(p[(i, j)] >= -1e-15);
                }
            }
        }
    }

    #[test]
    fn disconnected_components() {
        let g = NetworkGraph::metropolis(4, &[(1, 2), (3, 4)]).unwrap();
        assert!(!g.is_connected());
        assert!(g.diameter().is_err());
    }
}
