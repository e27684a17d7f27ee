//! Small fixed graphs used by the examples, the CLI and the tests.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{DirectedGraph, Graph};

/// Eight-vertex weighted graph (resistor network), 12 edges, total degree 7.46.
pub fn circuit_graph() -> Graph {
    let edges = [
        (0, 1, 0.23),
        (0, 2, 0.74),
        (0, 3, 0.24),
        (1, 2, 0.35),
        (1, 4, 0.23),
        (2, 3, 0.26),
        (2, 4, 0.24),
        (3, 6, 0.32),
        (4, 5, 0.51),
        (4, 7, 0.14),
        (5, 7, 0.15),
        (6, 7, 0.32),
    ];
    Graph::from_edges(8, &edges).expect("static edge list")
}

/// Same topology as [`circuit_graph`] with unit weights.
pub fn social_graph() -> Graph {
    let edges: Vec<(usize, usize, f64)> = circuit_graph().edges().into_iter().map(|(i, j, _)| (i, j, 1.0)).collect();
    Graph::from_edges(8, &edges).expect("static edge list")
}

/// Eight web pages with unit links.
pub fn page_graph() -> DirectedGraph {
    let links: [(usize, &[usize]); 8] =
        [(0, &[1]), (1, &[2]), (2, &[0, 3, 4, 7]), (3, &[0]), (4, &[1, 2, 5]), (5, &[7]), (6, &[3, 7]), (7, &[2, 6])];
    let mut w = DMatrix::zeros(8, 8);
    for (from, to) in links {
        for &t in to {
            w[(from, t)] = 1.0;
        }
    }
    DirectedGraph::new(w).expect("static link list")
}

/// Unweighted path 0 - 1 - ... - (n-1).
pub fn path_graph(n: usize) -> Graph {
    let edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
    Graph::from_edges(n, &edges).expect("path edges are valid")
}

/// Unweighted cycle on `n >= 3` vertices.
pub fn cycle_graph(n: usize) -> Graph {
    let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i, 1.0)).collect();
    if n >= 3 {
        edges.push((n - 1, 0, 1.0));
    }
    Graph::from_edges(n, &edges).expect("cycle edges are valid")
}

pub fn complete_graph(n: usize) -> Graph {
    Graph::new(DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 })).expect("complete graph is valid")
}

/// Connected graph on `n` vertices: a random spanning tree plus each remaining pair with probability
/// `density`, all weights uniform in [0.1, 1).
pub fn random_connected_graph(n: usize, density: f64, seed: u64) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = DMatrix::zeros(n, n);
    for v in 1..n {
        let u = rng.random_range(0..v);
        let x = rng.random_range(0.1..1.0);
        w[(u, v)] = x;
        w[(v, u)] = x;
    }
    for i in 0..n {
        for j in i + 1..n {
            if w[(i, j)] == 0.0 && rng.random_bool(density.clamp(0.0, 1.0)) {
                let x = rng.random_range(0.1..1.0);
                w[(i, j)] = x;
                w[(j, i)] = x;
            }
        }
    }
    Graph::new(w).expect("generated weights are valid")
}
