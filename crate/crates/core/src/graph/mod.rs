//! Weighted (di)graphs and the Laplacian quantities the trigger bounds depend on.
//!
//! A graph is stored as its dense weighted adjacency matrix `W` (row `i`
//! holds the weights of the out-edges of `i`). The Laplacian is
//! `L = D_out - W`, so `(L x)_i = sum_j w_ij (x_i - x_j)`.
//!
//! Spectral quantities are always taken from the symmetrized Laplacian
//! `Sym(L) = (L + L^T) / 2`, which is positive semidefinite exactly when the
//! graph is weight-balanced.

mod generate;
mod parse;

pub use generate::{complete_graph, cycle_digraph, path_graph, random_connected_undirected, random_weight_balanced};
pub use parse::{parse_graph, parse_graph_file};

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use thiserror::Error;

/// Absolute tolerance for the weight-balance test.
pub const BALANCE_TOL: f64 = 1e-12;
/// `lambda2` at or below this value means zero is not a simple eigenvalue.
pub const SPECTRAL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("weight matrix is {rows}x{cols}, expected {n}x{n}")]
    Shape { n: usize, rows: usize, cols: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("edge ({i}, {j}) has non-positive or non-finite weight {w}")]
    BadWeight { i: usize, j: usize, w: f64 },
    #[error("edge ({i}, {j}) references a vertex outside 0..{n}")]
    OutOfRange { i: usize, j: usize, n: usize },
    #[error("duplicate edge ({i}, {j})")]
    DuplicateEdge { i: usize, j: usize },
    #[error("undirected graph has asymmetric weights at ({i}, {j})")]
    Asymmetric { i: usize, j: usize },
    #[error("graph is not strongly connected")]
    NotConnected,
    #[error("graph is not weight-balanced (vertex {vertex}: out-degree {d_out}, in-degree {d_in})")]
    NotBalanced { vertex: usize, d_out: f64, d_in: f64 },
    #[error("graph file, line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("cannot read graph file: {0}")]
    Io(String),
}

/// A weighted digraph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    weights: DMatrix<f64>,
    directed: bool,
}

/// Algebraic connectivity, largest eigenvalue of `Sym(L)` and `||L||_2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralInfo {
    pub lambda2: f64,
    pub lambda_n: f64,
    pub laplacian_norm: f64,
}

impl WeightedDigraph {
    /// Builds a graph from an edge list of `(i, j, w)` triples.
    ///
    /// For undirected graphs each triple adds both `w_ij` and `w_ji`, and an
    /// edge listed in both orientations counts as a duplicate.
    pub fn from_edges(n: usize, directed: bool, edges: &[(usize, usize, f64)]) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut weights = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            parse::check_edge(n, (i, j, w))?;
            if weights[(i, j)] != 0.0 {
                return Err(GraphError::DuplicateEdge { i, j });
            }
            weights[(i, j)] = w;
            if !directed {
                weights[(j, i)] = w;
            }
        }
        Ok(Self { weights, directed })
    }

    /// Builds a graph from a dense weight matrix, checking the well-formedness invariants.
    pub fn from_weights(weights: DMatrix<f64>, directed: bool) -> Result<Self, GraphError> {
        let n = weights.nrows();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        if weights.ncols() != n {
            return Err(GraphError::Shape { n, rows: weights.nrows(), cols: weights.ncols() });
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(GraphError::SelfLoop(i));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(GraphError::BadWeight { i, j, w });
                }
                if !directed && w != weights[(j, i)] {
                    return Err(GraphError::Asymmetric { i, j });
                }
            }
        }
        Ok(Self { weights, directed })
    }

    pub fn n(&self) -> usize {
        self.weights.nrows()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.weights
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.weights[(i, j)]
    }

    /// Out-neighbors of `i` with their weights, in ascending id order.
    pub fn out_neighbors(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.n())
            .filter_map(|j| {
                let w = self.weights[(i, j)];
                (w > 0.0).then_some((j, w))
            })
            .collect()
    }

    /// In-neighbors of `i` with their weights `w_ji`.
    pub fn in_neighbors(&self, i: usize) -> Vec<(usize, f64)> {
        (0..self.n())
            .filter_map(|j| {
                let w = self.weights[(j, i)];
                (w > 0.0).then_some((j, w))
            })
            .collect()
    }

    pub fn out_degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.weights.row_iter().map(|r| r.sum()))
    }

    pub fn in_degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.weights.column_iter().map(|c| c.sum()))
    }

    /// Largest edge weight, 0 for an edgeless graph.
    pub fn max_weight(&self) -> f64 {
        self.weights.max()
    }

    /// Largest out-neighbor count.
    pub fn max_out_neighbors(&self) -> usize {
        (0..self.n()).map(|i| self.weights.row(i).iter().filter(|&&w| w > 0.0).count()).max().unwrap_or(0)
    }

    /// `L = D_out - W`.
    pub fn laplacian(&self) -> DMatrix<f64> {
        let mut l = -self.weights.clone();
        for (i, d) in self.out_degrees().iter().enumerate() {
            l[(i, i)] = *d;
        }
        l
    }

    pub fn is_weight_balanced(&self) -> bool {
        self.balance_violation().is_none()
    }

    fn balance_violation(&self) -> Option<GraphError> {
        let d_out = self.out_degrees();
        let d_in = self.in_degrees();
        (0..self.n()).find(|&i| (d_out[i] - d_in[i]).abs() > BALANCE_TOL).map(|vertex| GraphError::NotBalanced {
            vertex,
            d_out: d_out[vertex],
            d_in: d_in[vertex],
        })
    }

    /// Every vertex reaches every other along positive-weight directed edges.
    pub fn is_strongly_connected(&self) -> bool {
        let n = self.n();
        // Strongly connected iff vertex 0 reaches everything in both G and its reverse.
        let reach = |forward: bool| {
            let mut seen = vec![false; n];
            let mut stack = vec![0usize];
            seen[0] = true;
            while let Some(v) = stack.pop() {
                for u in 0..n {
                    let w = if forward { self.weights[(v, u)] } else { self.weights[(u, v)] };
                    if w > 0.0 && !seen[u] {
                        seen[u] = true;
                        stack.push(u);
                    }
                }
            }
            seen.into_iter().all(|s| s)
        };
        reach(true) && reach(false)
    }

    /// Checks the preconditions shared by every consensus law: strong connectivity and weight balance.
    pub fn check_consensus_ready(&self) -> Result<(), GraphError> {
        if !self.is_strongly_connected() {
            return Err(GraphError::NotConnected);
        }
        match self.balance_violation() {
            Some(e) => Err(e),
            None => Ok(()),
        }
    }

    /// Eigen-data of `Sym(L)` and the induced 2-norm of `L`.
    pub fn spectral_info(&self) -> Result<SpectralInfo, GraphError> {
        if let Some(e) = self.balance_violation() {
            return Err(e);
        }
        if !self.is_strongly_connected() {
            return Err(GraphError::NotConnected);
        }
        let l = self.laplacian();
        let mut eig: Vec<f64> = SymmetricEigen::new(symmetric_part(&l)).eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        let n = eig.len();
        let lambda2 = if n > 1 { eig[1] } else { 0.0 };
        if n > 1 && lambda2 <= SPECTRAL_TOL {
            return Err(GraphError::NotConnected);
        }
        Ok(SpectralInfo { lambda2, lambda_n: eig[n - 1], laplacian_norm: spectral_norm(&l) })
    }
}

/// `(M + M^T) / 2`.
pub fn symmetric_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Largest singular value.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    SVD::new(m.clone(), false, false).singular_values.max()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn p2() -> WeightedDigraph {
        WeightedDigraph::from_edges(2, false, &[(0, 1, 1.0)]).unwrap()
    }

    fn cycle3() -> WeightedDigraph {
        WeightedDigraph::from_edges(3, true, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)]).unwrap()
    }

    fn one_way() -> WeightedDigraph {
        WeightedDigraph::from_edges(2, true, &[(0, 1, 1.0)]).unwrap()
    }

    #[test]
    fn laplacian_examples() {
        assert_eq!(p2().laplacian(), dmatrix![1.0, -1.0; -1.0, 1.0]);
        assert_eq!(cycle3().laplacian(), dmatrix![1.0, -1.0, 0.0; 0.0, 1.0, -1.0; -1.0, 0.0, 1.0]);
        let empty = WeightedDigraph::from_edges(3, false, &[]).unwrap();
        assert_eq!(empty.laplacian(), DMatrix::zeros(3, 3));
    }

    #[test]
    fn balance_examples() {
        assert!(p2().is_weight_balanced());
        assert!(complete_graph(4, 2.5).is_weight_balanced());
        assert!(cycle3().is_weight_balanced());
        assert!(!one_way().is_weight_balanced());
    }

    #[test]
    fn connectivity_examples() {
        assert!(cycle3().is_strongly_connected());
        assert!(!one_way().is_strongly_connected());
        assert!(complete_graph(4, 1.0).is_strongly_connected());
        let split = WeightedDigraph::from_edges(4, false, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert!(!split.is_strongly_connected());
    }

    #[test]
    fn spectral_examples() {
        let s = p2().spectral_info().unwrap();
        assert!((s.lambda2 - 2.0).abs() < 1e-10);
        assert!((s.lambda_n - 2.0).abs() < 1e-10);
        assert!((s.laplacian_norm - 2.0).abs() < 1e-10);

        let s = complete_graph(3, 1.0).spectral_info().unwrap();
        assert!((s.lambda2 - 3.0).abs() < 1e-10);
        assert!((s.lambda_n - 3.0).abs() < 1e-10);

        let s = cycle3().spectral_info().unwrap();
        assert!((s.lambda2 - 1.5).abs() < 1e-10);
        assert!((s.lambda_n - 1.5).abs() < 1e-10);
        // ||L|| of the directed 3-cycle is sqrt(3) (numpy oracle)
        assert!((s.laplacian_norm - 3f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn spectral_errors() {
        assert!(matches!(one_way().spectral_info(), Err(GraphError::NotBalanced { .. })));
        let split = WeightedDigraph::from_edges(4, false, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        assert_eq!(split.spectral_info(), Err(GraphError::NotConnected));
    }

    #[test]
    fn edge_list_validation() {
        assert_eq!(WeightedDigraph::from_edges(2, false, &[(1, 1, 0.5)]), Err(GraphError::SelfLoop(1)));
        assert!(matches!(
            WeightedDigraph::from_edges(2, false, &[(0, 1, 0.0)]),
            Err(GraphError::BadWeight { .. })
        ));
        assert!(matches!(
            WeightedDigraph::from_edges(2, false, &[(0, 2, 1.0)]),
            Err(GraphError::OutOfRange { .. })
        ));
        assert_eq!(
            WeightedDigraph::from_edges(2, false, &[(0, 1, 1.0), (1, 0, 1.0)]),
            Err(GraphError::DuplicateEdge { i: 1, j: 0 })
        );
        assert!(WeightedDigraph::from_edges(2, true, &[(0, 1, 1.0), (1, 0, 1.0)]).is_ok());
        assert_eq!(WeightedDigraph::from_edges(0, true, &[]), Err(GraphError::Empty));
    }

    #[test]
    fn weight_matrix_validation() {
        assert!(matches!(
            WeightedDigraph::from_weights(dmatrix![0.0, 1.0; 2.0, 0.0], false),
            Err(GraphError::Asymmetric { .. })
        ));
        assert!(WeightedDigraph::from_weights(dmatrix![0.0, 1.0; 2.0, 0.0], true).is_ok());
        assert_eq!(WeightedDigraph::from_weights(dmatrix![1.0, 1.0; 1.0, 0.0], true), Err(GraphError::SelfLoop(0)));
    }

    #[test]
    fn degree_helpers() {
        let g = WeightedDigraph::from_edges(3, true, &[(0, 1, 2.0), (0, 2, 0.5), (1, 0, 1.0)]).unwrap();
        assert_eq!(g.out_neighbors(0), vec![(1, 2.0), (2, 0.5)]);
        assert_eq!(g.in_neighbors(0), vec![(1, 1.0)]);
        assert_eq!(g.max_weight(), 2.0);
        assert_eq!(g.max_out_neighbors(), 2);
        assert_eq!(g.out_degrees().as_slice(), &[2.5, 1.0, 0.0]);
        assert_eq!(g.in_degrees().as_slice(), &[1.0, 2.0, 0.5]);
    }
}
