//! Worked examples with published values.

use graphtopo::graph::{laplacian, normalized_laplacian, smoothness, Graph, LaplacianKind};
use graphtopo::lattice::{kron_sum_adjacency, Lattice};
use graphtopo::learning::{
    correlation_matrix, mse_db, neighborhood_regression, polynomial_fit_eigenvalues, ObservationMatrix, PolyFitConfig,
};
use graphtopo::physical::{
    absorbing_probabilities, circuit_solve, hitting_times, pagerank, BoundaryCondition, ResistanceMetric,
};
use graphtopo::portfolio::{cluster_weights, AllocationScheme, CutTree};
use graphtopo::samples::{circuit_graph, page_graph, social_graph};
use graphtopo::simulate::{simulate, SimMode, SimSpec};
use graphtopo::sparse::{lasso_ista, LassoConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};

fn assert_close(actual: &[f64], expected: &[f64], tol: f64) {
    assert_eq!(actual.len(), expected.len());
    for (k, (a, e)) in actual.iter().zip(expected).enumerate() {
        assert!((a - e).abs() <= tol, "entry {k}: {a} vs {e}\n{actual:?}");
    }
}

#[test]
fn sparse_vector_from_forty_observations() {
    let (n, m) = (60, 40);
    let mut rng = ChaCha8Rng::seed_from_u64(40);
    let dist = Normal::new(0.0, (1.0 / m as f64).sqrt()).unwrap();
    let a = DMatrix::from_fn(m, n, |_, _| rng.sample(dist));
    let support = [(5usize, 1.0), (12, 0.5), (31, 0.9), (45, -0.75)];
    let mut truth = DVector::zeros(n);
    for &(k, v) in &support {
        truth[k] = v;
    }
    let y = &a * &truth;
    let x = lasso_ista(&a, &y, &LassoConfig::new(0.01).with_max_iter(1000)).unwrap().x;
    let found: Vec<usize> = (0..n).filter(|&k| x[k].abs() > 0.05).collect();
    assert_eq!(found, support.iter().map(|s| s.0).collect::<Vec<_>>());
    for &(k, v) in &support {
        assert!((x[k] - v).abs() < 0.05, "x[{k}] = {}", x[k]);
    }
}

fn chain_signals(p: usize, seed: u64) -> ObservationMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = DMatrix::from_fn(4, p, |_, _| rng.sample::<f64, _>(StandardNormal));
    for i in 1..4 {
        let prev = x.row(i - 1).clone_owned();
        x.row_mut(i).zip_apply(&prev, |a, b| *a += b);
    }
    ObservationMatrix::new(x).unwrap()
}

#[test]
fn regression_on_the_chain_finds_the_direct_neighbor() {
    let beta = neighborhood_regression(&chain_signals(100_000, 1), &LassoConfig::new(0.01)).unwrap();
    let row: Vec<f64> = (1..4).map(|k| beta.matrix()[(0, k)]).collect();
    assert_close(&row, &[0.5, 0.0, 0.0], 0.05);
}

#[test]
fn chain_correlation_matrix() {
    let r = correlation_matrix(&chain_signals(100_000, 2), false);
    let expected = DMatrix::from_fn(4, 4, |i, j| (i.min(j) + 1) as f64);
    assert!((r - expected).amax() < 0.05);
}

fn path_through(order: &[usize]) -> Graph {
    let edges: Vec<(usize, usize, f64)> = order.windows(2).map(|w| (w[0], w[1], 1.0)).collect();
    Graph::from_edges(order.len(), &edges).unwrap()
}

#[test]
fn smoother_path_ordering_has_smaller_quadratic_form() {
    let x: DVector<f64> = DVector::from_vec(vec![0.7, 0.2, 0.6, 1.1, -0.3, -1.1, 1.3, -0.7]);
    let mut sorted: Vec<usize> = (0..8).collect();
    sorted.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    // alternate between the low and high ends of the sorted values
    let alternating: Vec<usize> = (0..4).flat_map(|k| [sorted[k], sorted[7 - k]]).collect();
    let energy = |order: &[usize]| {
        smoothness(&laplacian(&path_through(order), LaplacianKind::Combinatorial).unwrap(), &x).unwrap()
    };
    let (b, c) = (energy(&sorted), energy(&alternating));
    assert!(b < c, "{b} vs {c}");
}

#[test]
fn polynomial_fit_recovers_diffusion_weights() {
    let g = circuit_graph();
    let truth = normalized_laplacian(&g, true).unwrap().to_weights();
    let spec = SimSpec::new(SimMode::Diffusion { h: vec![0.3, 0.2, 0.5] }, 42, 10_000).unwrap();
    let r = correlation_matrix(&simulate(&g, &spec).unwrap(), false);
    let fit = polynomial_fit_eigenvalues(&r, &PolyFitConfig::new(2)).unwrap();
    let mse = mse_db(&fit.laplacian.to_weights(), &truth).unwrap();
    assert!(mse <= -20.0, "{mse} dB");
}

#[test]
fn circuit_voltages() {
    let l = laplacian(&circuit_graph(), LaplacianKind::Combinatorial).unwrap();
    let bc = BoundaryCondition::from_pairs([(2, 7.13), (5, 8.18), (7, 0.0)]).unwrap();
    let x = circuit_solve(&l, &bc, None).unwrap();
    assert_close(&[x[0], x[1], x[3], x[4], x[6]], &[6.71, 6.88, 5.25, 6.67, 2.62], 0.01);
}

#[test]
fn eight_page_ranking() {
    let pr = pagerank(&page_graph(), None, 1e-6, 1000).unwrap();
    assert_close(pr.rank.as_slice(), &[1.33, 1.52, 2.18, 0.79, 0.55, 0.18, 0.48, 0.97], 0.01);
}

#[test]
fn absorption_on_the_social_graph() {
    let bc = BoundaryCondition::from_pairs([(4, 1.0), (3, 0.0)]).unwrap();
    let p = absorbing_probabilities(&social_graph(), &bc).unwrap();
    assert_close(p.as_slice(), &[0.375, 0.625, 0.5, 0.0, 1.0, 0.875, 0.375, 0.75], 1e-3);
}

#[test]
fn hitting_and_commute_times() {
    let g = circuit_graph();
    let h = hitting_times(&g, 3).unwrap();
    let expected = [9.0155, 11.3003, 9.5942, 12.6594, 13.1427, 6.1930, 10.3860];
    let others: Vec<f64> = (0..8).filter(|&v| v != 3).map(|v| h[v]).collect();
    assert_close(&others, &expected, 1e-3);
    assert_eq!(h[3], 0.0);
    let m = ResistanceMetric::new(&g).unwrap();
    assert!((m.resistance(7, 0) - 4.0745).abs() < 1e-3);
    assert!((m.commute_time(7, 0) - 30.3960).abs() < 1e-3);
}

#[test]
fn product_of_three_paths() {
    let g = kron_sum_adjacency(&Lattice::new(vec![2, 3, 2]).unwrap()).unwrap();
    assert_eq!(g.n(), 12);
    assert_eq!(g.edges().len(), 20);
}

#[test]
fn allocation_over_the_dendrogram_leaves() {
    let mut t = CutTree::root(8);
    let (a, b) = t.split(0, &[0, 1, 2, 3]).unwrap();
    t.split(a, &[0, 1]).unwrap();
    let (_, bb) = t.split(b, &[4, 5]).unwrap();
    t.split(bb, &[6]).unwrap();
    assert_eq!(t.leaves().len(), 5);
    assert_eq!(cluster_weights(&t, AllocationScheme::As1), vec![0.25, 0.25, 0.25, 0.125, 0.125]);
    assert_eq!(cluster_weights(&t, AllocationScheme::As2), vec![0.2; 5]);
}
