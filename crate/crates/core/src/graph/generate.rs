//! Standard and random graph families used by tests, benchmarks and sweeps.

use nalgebra::DMatrix;

use super::WeightedDigraph;
use crate::rng::Xorshift64Star;

/// Undirected path `0 - 1 - ... - (n-1)` with uniform weight.
pub fn path_graph(n: usize, w: f64) -> WeightedDigraph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i, w)).collect();
    WeightedDigraph::from_edges(n, false, &edges).expect("path graph is well-formed")
}

/// Undirected complete graph with uniform weight.
pub fn complete_graph(n: usize, w: f64) -> WeightedDigraph {
    let edges: Vec<_> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j, w))).collect();
    WeightedDigraph::from_edges(n, false, &edges).expect("complete graph is well-formed")
}

/// Directed cycle `0 -> 1 -> ... -> (n-1) -> 0` with uniform weight. Needs `n >= 2`.
pub fn cycle_digraph(n: usize, w: f64) -> WeightedDigraph {
    let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, w)).collect();
    WeightedDigraph::from_edges(n, true, &edges).expect("cycle digraph is well-formed")
}

/// Random connected undirected graph: a random spanning tree plus every
/// remaining pair with probability `extra_edge_prob`.
///
/// With `weights = None` every edge has weight 1; otherwise weights are
/// drawn uniformly from the given range.
pub fn random_connected_undirected(
    n: usize,
    extra_edge_prob: f64,
    weights: Option<(f64, f64)>,
    rng: &mut Xorshift64Star,
) -> WeightedDigraph {
    let draw_w = |rng: &mut Xorshift64Star| match weights {
        Some((lo, hi)) => rng.uniform(lo, hi),
        None => 1.0,
    };
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let mut w = DMatrix::zeros(n, n);
    for k in 1..n {
        let (a, b) = (order[k], order[rng.below(k)]);
        let wt = draw_w(rng);
        w[(a, b)] = wt;
        w[(b, a)] = wt;
    }
    for i in 0..n {
        for j in i + 1..n {
            if w[(i, j)] == 0.0 && rng.next_f64() < extra_edge_prob {
                let wt = draw_w(rng);
                w[(i, j)] = wt;
                w[(j, i)] = wt;
            }
        }
    }
    WeightedDigraph::from_weights(w, false).expect("generated graph is well-formed")
}

/// Random strongly connected weight-balanced digraph built as a superposition
/// of directed cycles.
///
/// A Hamiltonian cycle through a random vertex order guarantees strong
/// connectivity; `extra_cycles` further simple cycles over random vertex
/// subsets (length 2..=n) are added on top. Each cycle carries one weight
/// from `weight_range`, so every vertex gains equal in- and out-weight.
pub fn random_weight_balanced(
    n: usize,
    extra_cycles: usize,
    weight_range: (f64, f64),
    rng: &mut Xorshift64Star,
) -> WeightedDigraph {
    assert!(n >= 2, "a cycle needs at least two vertices");
    let mut w = DMatrix::zeros(n, n);
    let add_cycle = |w: &mut DMatrix<f64>, cycle: &[usize], wt: f64| {
        for k in 0..cycle.len() {
            let (a, b) = (cycle[k], cycle[(k + 1) % cycle.len()]);
            w[(a, b)] += wt;
        }
    };
    let mut order: Vec<usize> = (0..n).collect();
    rng.shuffle(&mut order);
    let wt = rng.uniform(weight_range.0, weight_range.1);
    add_cycle(&mut w, &order, wt);
    for _ in 0..extra_cycles {
        let len = 2 + rng.below(n - 1);
        rng.shuffle(&mut order);
        let wt = rng.uniform(weight_range.0, weight_range.1);
        add_cycle(&mut w, &order[..len], wt);
    }
    WeightedDigraph::from_weights(w, true).expect("generated digraph is well-formed")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn families_are_well_formed() {
        assert_eq!(path_graph(4, 1.0).out_neighbors(1), vec![(0, 1.0), (2, 1.0)]);
        assert_eq!(complete_graph(4, 1.0).max_out_neighbors(), 3);
        assert!(cycle_digraph(5, 2.0).is_weight_balanced());
        assert!(cycle_digraph(5, 2.0).is_strongly_connected());
    }

    #[test]
    fn random_undirected_is_connected() {
        let mut rng = Xorshift64Star::new(1);
        for n in 1..=8 {
            for _ in 0..20 {
                let g = random_connected_undirected(n, 0.3, Some((0.5, 2.0)), &mut rng);
                assert!(g.is_strongly_connected());
                assert!(g.is_weight_balanced());
                assert!(!g.is_directed());
            }
        }
    }

    #[test]
    fn random_cycle_sums_are_balanced_and_connected() {
        let mut rng = Xorshift64Star::new(2);
        for n in 2..=8 {
            for _ in 0..20 {
                let g = random_weight_balanced(n, 3, (0.2, 2.0), &mut rng);
                assert!(g.is_strongly_connected());
                assert!(g.is_weight_balanced());
                assert!(g.spectral_info().is_ok());
            }
        }
    }
}
