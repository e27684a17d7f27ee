use graphtopo::geometric::{geometric_weights, KernelKind, KernelSpec, VertexCloud};
use graphtopo::graph::{laplacian, normalized_laplacian, smoothness, DirectedGraph, Graph, LaplacianKind};
use graphtopo::io::format_matrix_csv;
use graphtopo::lattice::{kron_sum_adjacency, separable_gdft, Lattice};
use graphtopo::learning::{
    correlation_matrix, learn_from_sources, neighborhood_regression, polynomial_fit_eigenvalues, smooth_learn,
    ObservationMatrix, PolyFitConfig,
};
use graphtopo::metro::{betweenness, fick_population_unshifted, FlowVector};
use graphtopo::physical::{
    circuit_solve, hitting_times, label_propagation, pagerank, BoundaryCondition, ResistanceMetric,
};
use graphtopo::portfolio::{
    allocate, cut_indicator, cut_value, repeated_cuts, spectral_bisect, AllocationScheme, CutKind, LeafSelect,
};
use graphtopo::samples::random_connected_graph;
use graphtopo::simulate::{compensated_sources, simulate, simulate_serial, snapshot_rng, SimMode, SimSpec};
use graphtopo::sparse::{glasso, lasso_ista, soft_threshold, GlassoConfig, LassoConfig};
use graphtopo::spectral::eig_sym;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn normal_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Any weighted graph, possibly disconnected.
fn any_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        prop::collection::vec(prop_oneof![Just(0.0), 0.01..2.0f64], n * (n - 1) / 2).prop_map(move |ws| {
            let mut w = DMatrix::zeros(n, n);
            let mut it = ws.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    let x = it.next().unwrap();
                    w[(i, j)] = x;
                    w[(j, i)] = x;
                }
            }
            Graph::new(w).unwrap()
        })
    })
}

fn connected_graph(min_n: usize, max_n: usize) -> impl Strategy<Value = Graph> {
    (min_n..=max_n, any::<u64>(), 0.0..0.6f64).prop_map(|(n, seed, d)| random_connected_graph(n, d, seed))
}

fn laplacian_of(g: &Graph) -> graphtopo::graph::Laplacian {
    laplacian(g, LaplacianKind::Combinatorial).unwrap()
}

fn symmetric_psd(n: usize, seed: u64, shift: f64) -> DMatrix<f64> {
    let a = normal_matrix(n, n + 2, seed);
    &a * a.transpose() / (n + 2) as f64 + DMatrix::identity(n, n) * shift
}

fn config() -> ProptestConfig {
    ProptestConfig { cases: 64, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn laplacian_rows_sum_to_zero_and_spectrum_is_non_negative(g in any_graph(9)) {
        let l = laplacian_of(&g);
        for i in 0..g.n() {
            prop_assert!(l.matrix().row(i).sum().abs() < 1e-12);
        }
        prop_assert!(eig_sym(l.matrix()).unwrap().eigenvalues()[0] >= -1e-10);
    }

    #[test]
    fn connected_graphs_have_a_simple_zero_eigenvalue(g in connected_graph(2, 12)) {
        let values = eig_sym(laplacian_of(&g).matrix()).unwrap().eigenvalues().clone();
        prop_assert!(values[0].abs() < 1e-10);
        prop_assert!(values[1] > 1e-8);
    }

    #[test]
    fn eig_sym_round_trip(n in 1usize..12, seed in any::<u64>()) {
        let a = normal_matrix(n, n, seed);
        let m = (&a + a.transpose()) * 0.5;
        let d = eig_sym(&m).unwrap();
        let err = (d.reconstruct() - &m).norm() / m.norm().max(f64::MIN_POSITIVE);
        prop_assert!(err < 1e-9, "relative error {err}");
    }

    #[test]
    fn smoothness_is_non_negative(g in connected_graph(2, 10), seed in any::<u64>()) {
        let x = normal_matrix(g.n(), 1, seed).column(0).into_owned();
        prop_assert!(smoothness(&laplacian_of(&g), &x).unwrap() >= -1e-12);
        prop_assert!(smoothness(&normalized_laplacian(&g, true).unwrap(), &x).unwrap() >= -1e-12);
    }

    #[test]
    fn kernel_graphs_are_valid_and_monotone(
        n in 2usize..10,
        seed in any::<u64>(),
        tau in 0.1..2.0f64,
        kappa in 0.2..3.0f64,
        kind in prop_oneof![Just(KernelKind::GaussSq), Just(KernelKind::ExpLin)],
    ) {
        let cloud = VertexCloud::new(normal_matrix(n, 2, seed)).unwrap();
        let spec = KernelSpec::new(kind, tau, kappa).unwrap();
        let g = geometric_weights(&cloud, &spec).unwrap();
        let w = g.weights();
        prop_assert_eq!(w, &w.transpose());
        prop_assert!(w.iter().all(|&x| x >= 0.0));
        prop_assert!((0..n).all(|i| w[(i, i)] == 0.0));
        let mut pairs = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                pairs.push((cloud.distance(i, j), w[(i, j)]));
            }
        }
        for &(r1, w1) in &pairs {
            for &(r2, w2) in &pairs {
                if r1 < r2 {
                    prop_assert!(w1 >= w2);
                    if r2 <= kappa {
                        prop_assert!(w1 > w2);
                    }
                }
            }
        }
    }

    #[test]
    fn soft_threshold_is_a_contraction(a in -10.0..10.0f64, b in -10.0..10.0f64, t in 0.0..5.0f64) {
        prop_assert!((soft_threshold(a, t) - soft_threshold(b, t)).abs() <= (a - b).abs() + 1e-12);
    }

    #[test]
    fn ista_objective_never_increases(m in 3usize..15, n in 2usize..12, rho in 0.0..1.0f64, seed in any::<u64>()) {
        let a = normal_matrix(m, n, seed);
        let y = normal_matrix(m, 1, seed.wrapping_add(1)).column(0).into_owned();
        let sol = lasso_ista(&a, &y, &LassoConfig::new(rho).with_max_iter(300).tracked()).unwrap();
        for k in 1..sol.objective.len() {
            let (prev, cur) = (sol.objective[k - 1], sol.objective[k]);
            prop_assert!(cur <= prev + 1e-12 * prev.abs().max(1.0), "step {k}: {prev} -> {cur}");
        }
    }

    #[test]
    fn unpenalized_ista_is_least_squares(n in 1usize..6, extra in 2usize..10, seed in any::<u64>()) {
        let m = n + extra;
        let a = normal_matrix(m, n, seed);
        let y = normal_matrix(m, 1, seed ^ 0x5555).column(0).into_owned();
        let cfg = LassoConfig::new(0.0).with_max_iter(200_000).with_tol(1e-14);
        let x = lasso_ista(&a, &y, &cfg).unwrap().x;
        let ls = (a.transpose() * &a).cholesky().unwrap().solve(&(a.transpose() * &y));
        prop_assert!((x - ls).amax() < 1e-5);
    }

    #[test]
    fn glasso_is_symmetric_and_inverts_at_zero_penalty(n in 2usize..7, seed in any::<u64>(), rho in 0.0..0.5f64) {
        let r = symmetric_psd(n, seed, 0.5);
        let q = glasso(&r, &GlassoConfig::new(rho)).unwrap().q;
        prop_assert!((&q - q.transpose()).amax() < 1e-8);
        let q0 = glasso(&r, &GlassoConfig::new(0.0)).unwrap().q;
        let resid = (&q0 * &r - DMatrix::identity(n, n)).amax();
        prop_assert!(resid < 1e-4, "|QR - I| = {resid}");
    }

    #[test]
    fn correlation_is_symmetric_psd(n in 1usize..8, p in 1usize..30, seed in any::<u64>(), center: bool) {
        let x = ObservationMatrix::new(normal_matrix(n, p, seed)).unwrap();
        let r = correlation_matrix(&x, center);
        prop_assert!((&r - r.transpose()).amax() < 1e-10);
        prop_assert!(eig_sym(&r).unwrap().eigenvalues()[0] >= -1e-10);
    }

    #[test]
    fn unpenalized_regression_is_least_squares(n in 2usize..5, seed in any::<u64>()) {
        let p = 6 * n;
        let data = normal_matrix(n, p, seed);
        let x = ObservationMatrix::new(data.clone()).unwrap();
        let beta = neighborhood_regression(&x, &LassoConfig::new(0.0).with_max_iter(200_000).with_tol(1e-14)).unwrap();
        for row in 0..n {
            let others: Vec<usize> = (0..n).filter(|&k| k != row).collect();
            let a = DMatrix::from_fn(p, n - 1, |t, c| data[(others[c], t)]);
            let y = data.row(row).transpose();
            let ls = (a.transpose() * &a).cholesky().unwrap().solve(&(a.transpose() * &y));
            for (c, &k) in others.iter().enumerate() {
                prop_assert!((beta.matrix()[(row, k)] - ls[c]).abs() < 1e-5);
            }
        }
    }

    #[test]
    fn polyfit_eigenvalues_are_normalized(g in connected_graph(3, 9), m in 1usize..3) {
        // correlation of ideal diffusion data, R = H(L)² with H = 1 + L
        let l = laplacian_of(&g);
        let d = eig_sym(l.matrix()).unwrap();
        let r = d.apply(|lam| (1.0 + lam) * (1.0 + lam));
        let mut cfg = PolyFitConfig::new(m);
        cfg.grid_points = 8;
        let fit = polynomial_fit_eigenvalues(&r, &cfg).unwrap();
        prop_assert!(fit.eigenvalues[0].abs() < 1e-9);
        prop_assert!((fit.eigenvalues.sum() - g.n() as f64).abs() < 1e-9);
    }

    #[test]
    fn source_learning_has_zero_row_and_column_sums(g in connected_graph(2, 10), extra in 0usize..5, seed in any::<u64>()) {
        let n = g.n();
        let x = normal_matrix(n, n - 1 + extra, seed);
        let j = laplacian_of(&g).matrix() * &x;
        let est = learn_from_sources(&x, &j, None).unwrap().laplacian;
        for i in 0..n {
            prop_assert!(est.matrix().row(i).sum().abs() < 1e-9);
            prop_assert!(est.matrix().column(i).sum().abs() < 1e-9);
        }
    }

    #[test]
    fn circuit_residuals_and_maximum_principle(g in connected_graph(3, 12), seed in any::<u64>()) {
        let n = g.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let fixed = rng.random_range(1..n);
        let mut bc = BoundaryCondition::new();
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        for &v in &order[..fixed] {
            bc.pin(v, rng.random_range(-5.0..5.0)).unwrap();
        }
        let l = laplacian_of(&g);
        let x = circuit_solve(&l, &bc, None).unwrap();
        let resid = l.matrix() * &x;
        let (lo, hi) = (bc.min_value().unwrap(), bc.max_value().unwrap());
        for v in (0..n).filter(|&v| !bc.is_fixed(v)) {
            prop_assert!(resid[v].abs() < 1e-9);
            prop_assert!(x[v] >= lo - 1e-9 && x[v] <= hi + 1e-9);
        }
    }

    #[test]
    fn undamped_pagerank_is_a_fixed_point(n in 2usize..10, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut edges: Vec<(usize, usize, f64)> = (0..n).map(|i| (i, (i + 1) % n, 1.0)).collect();
        for i in 0..n {
            for j in 0..n {
                if i != j && j != (i + 1) % n && rng.random_bool(0.3) {
                    edges.push((i, j, 1.0));
                }
            }
        }
        let g = DirectedGraph::from_edges(n, &edges).unwrap();
        let tol = 1e-9;
        let pr = pagerank(&g, None, tol, 100_000).unwrap();
        prop_assume!(pr.converged);
        let out = g.out_degrees();
        let wn = DMatrix::from_fn(n, n, |i, j| g.weights()[(j, i)] / out[j]);
        prop_assert!((&wn * &pr.rank - &pr.rank).amax() < 10.0 * tol * pr.rank.amax());
    }

    #[test]
    fn commute_times_are_symmetric_and_resistance_is_a_metric(g in connected_graph(3, 12)) {
        let m = ResistanceMetric::new(&g).unwrap();
        let n = g.n();
        for a in 0..n {
            for b in 0..n {
                prop_assert!((m.commute_time(a, b) - m.commute_time(b, a)).abs() < 1e-9);
                for c in 0..n {
                    let lhs = m.resistance(a, c).max(0.0).sqrt();
                    let rhs = m.resistance(a, b).max(0.0).sqrt() + m.resistance(b, c).max(0.0).sqrt();
                    prop_assert!(lhs <= rhs + 1e-9);
                }
            }
        }
    }

    #[test]
    fn commute_time_is_the_round_trip(g in connected_graph(2, 20), seed in any::<u64>()) {
        let n = g.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = rng.random_range(0..n);
        let b = (a + rng.random_range(1..n)) % n;
        let ct = ResistanceMetric::new(&g).unwrap().commute_time(a, b);
        let h_ab = hitting_times(&g, b).unwrap()[a];
        let h_ba = hitting_times(&g, a).unwrap()[b];
        prop_assert!((ct - h_ab - h_ba).abs() < 1e-6 * ct.max(1.0), "{ct} vs {h_ab} + {h_ba}");
    }

    #[test]
    fn propagation_iterates_stay_in_label_range(g in connected_graph(3, 10), seed in any::<u64>()) {
        let n = g.n();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let count = rng.random_range(1..n);
        let labels = BoundaryCondition::from_pairs((0..count).map(|v| (v, rng.random_range(-3.0..3.0)))).unwrap();
        let (lo, hi) = (labels.min_value().unwrap(), labels.max_value().unwrap());
        for steps in 1..=15 {
            let x = label_propagation(&g, &labels, steps, 0.0).unwrap().scores;
            prop_assert!(x.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12), "step {steps}: {x}");
        }
    }

    #[test]
    fn simulation_is_reproducible(g in connected_graph(3, 8), seed in any::<u64>(), mode in 0usize..6) {
        let m = match mode {
            0 => SimMode::Sources,
            1 => SimMode::Dipole,
            2 => SimMode::PinnedPair,
            3 => SimMode::Diffusion { h: vec![0.3, 0.2, 0.5] },
            4 => SimMode::AdjacencyShift { k: 2, spikes: 2, amplitudes: None },
            _ => SimMode::Bandlimited { indices: vec![0, 1], amplitudes: None, basis: Default::default() },
        };
        let spec = SimSpec::new(m, seed, 17).unwrap();
        let a = format_matrix_csv(simulate(&g, &spec).unwrap().data());
        let b = format_matrix_csv(simulate(&g, &spec).unwrap().data());
        let c = format_matrix_csv(simulate_serial(&g, &spec).unwrap().data());
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(&a, &c);
    }

    #[test]
    fn compensated_sources_sum_to_exactly_zero(n in 2usize..40, seed in any::<u64>(), snapshot in 0usize..1000) {
        let (eps, c) = compensated_sources(&mut snapshot_rng(seed, snapshot), n);
        let rest: f64 = (0..n).filter(|&v| v != c).map(|v| eps[v]).sum();
        prop_assert_eq!(rest + eps[c], 0.0);
    }

    #[test]
    fn interior_lattice_vertices_have_degree_two_m(dims in prop::collection::vec(3usize..6, 1..4)) {
        let lat = Lattice::new(dims.clone()).unwrap();
        let g = kron_sum_adjacency(&lat).unwrap();
        let deg = g.degrees();
        for v in 0..lat.n() {
            let c = lat.coords(v);
            if c.iter().zip(&dims).all(|(&i, &d)| i > 0 && i + 1 < d) {
                prop_assert_eq!(deg[v], 2.0 * dims.len() as f64);
            }
        }
    }

    #[test]
    fn separable_spectrum_equals_dense_spectrum(dims in prop::collection::vec(1usize..5, 1..4)) {
        let lat = Lattice::new(dims).unwrap();
        let mut sep: Vec<f64> = separable_gdft(&lat).unwrap().eigenvalues().iter().copied().collect();
        sep.sort_by(f64::total_cmp);
        let dense = eig_sym(kron_sum_adjacency(&lat).unwrap().weights()).unwrap();
        for (a, b) in sep.iter().zip(dense.eigenvalues().iter()) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn allocations_sum_to_one(g in connected_graph(2, 64), k in 1usize..=8, volume: bool) {
        let k = k.min(g.n() - 1);
        let select = if volume { LeafSelect::LargestVolume } else { LeafSelect::LargestSize };
        let tree = repeated_cuts(&g, k, CutKind::Normalized, select).unwrap().tree;
        for scheme in [AllocationScheme::As1, AllocationScheme::As2] {
            let w = allocate(&tree, scheme).unwrap();
            prop_assert!((w.sum() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectral_cut_matches_rayleigh_quotient_and_never_beats_brute_force(
        g in connected_graph(2, 12),
        volume: bool,
    ) {
        let kind = if volume { CutKind::Volume } else { CutKind::Normalized };
        let n = g.n();
        let l = laplacian_of(&g);
        let d = g.degrees();
        let quotient = |side: &[bool]| {
            let x = cut_indicator(&g, side, kind).unwrap();
            let den = match kind {
                CutKind::Normalized => x.dot(&x),
                CutKind::Volume => x.iter().zip(d.iter()).map(|(a, b)| a * a * b).sum(),
            };
            x.dot(&(l.matrix() * &x)) / den
        };
        let bis = spectral_bisect(&g, kind).unwrap();
        let spectral = cut_value(&g, &bis.side, kind).unwrap();
        prop_assert!((spectral - quotient(&bis.side)).abs() < 1e-10);
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << (n - 1)) {
            let side: Vec<bool> = (0..n).map(|i| i < n - 1 && mask & (1 << i) != 0).collect();
            let c = cut_value(&g, &side, kind).unwrap();
            prop_assert!((c - quotient(&side)).abs() < 1e-10);
            best = best.min(c);
        }
        prop_assert!(best <= spectral + 1e-12);
    }

    #[test]
    fn fick_estimate_solves_the_flow_equation(g in connected_graph(2, 15), k in 0.1..5.0f64, seed in any::<u64>()) {
        let n = g.n();
        let mut q = normal_matrix(n, 1, seed).column(0).into_owned();
        let mean = q.mean();
        q.add_scalar_mut(-mean);
        let l = laplacian_of(&g);
        let phi = fick_population_unshifted(&l, &FlowVector::new(q.clone()).unwrap(), k);
        let mut resid = l.matrix() * phi + q / k;
        let mean = resid.mean();
        resid.add_scalar_mut(-mean);
        prop_assert!(resid.amax() < 1e-8);
    }

    #[test]
    fn betweenness_matches_path_enumeration(g in connected_graph(2, 10)) {
        let n = g.n();
        // hop distances and shortest-path counts by Floyd-Warshall style relaxation
        let inf = usize::MAX / 4;
        let mut dist = vec![vec![inf; n]; n];
        for i in 0..n {
            dist[i][i] = 0;
            for j in g.neighbors(i) {
                dist[i][j] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if dist[i][k] + dist[k][j] < dist[i][j] {
                        dist[i][j] = dist[i][k] + dist[k][j];
                    }
                }
            }
        }
        let mut count = vec![vec![0.0f64; n]; n];
        for s in 0..n {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by_key(|&v| dist[s][v]);
            count[s][s] = 1.0;
            for &v in order.iter().skip(1) {
                count[s][v] = g.neighbors(v).filter(|&u| dist[s][u] + 1 == dist[s][v]).map(|u| count[s][u]).sum();
            }
        }
        let b = betweenness(&g);
        for v in 0..n {
            let mut expected = 0.0;
            for s in 0..n {
                for t in s + 1..n {
                    if s != v && t != v && dist[s][v] + dist[v][t] == dist[s][t] {
                        expected += count[s][v] * count[v][t] / count[s][t];
                    }
                }
            }
            prop_assert!((b[v] - expected).abs() < 1e-9, "vertex {v}: {} vs {expected}", b[v]);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn smooth_learning_meets_its_constraints(n in 3usize..7, seed in any::<u64>()) {
        let x = ObservationMatrix::new(normal_matrix(n, 20, seed)).unwrap();
        let res = smooth_learn(&x, 0.1, 0.5, 4).unwrap();
        let l = res.laplacian.matrix();
        prop_assert!((l.trace() - n as f64).abs() < 1e-6);
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    prop_assert!(l[(i, j)] <= 1e-9);
                }
            }
        }
    }
}

#[test]
fn kernels_equal_one_at_zero_distance() {
    for kind in [KernelKind::GaussSq, KernelKind::ExpLin, KernelKind::Binary] {
        let k = KernelSpec::new(kind, 0.7, 1.0).unwrap();
        assert_eq!(k.eval(0.0).unwrap(), 1.0, "{kind:?}");
    }
}

#[test]
fn diffusion_covariance_error_shrinks_like_one_over_root_p() {
    let g = graphtopo::samples::circuit_graph();
    let h = [0.3, 0.2, 0.5];
    let ln = normalized_laplacian(&g, true).unwrap();
    let filt = eig_sym(ln.matrix()).unwrap().apply(|lam| h[0] + h[1] * lam + h[2] * lam * lam);
    let target = &filt * &filt;
    // the bound is on the typical error, so it is checked on the RMS over seeds
    for p in [1_000usize, 4_000, 10_000] {
        let seeds = 16;
        let mut sq = 0.0;
        for seed in 0..seeds {
            let x = simulate(&g, &SimSpec::new(SimMode::Diffusion { h: h.to_vec() }, seed, p).unwrap()).unwrap();
            sq += ((correlation_matrix(&x, false) - &target).norm() / target.norm()).powi(2);
        }
        let rms = (sq / seeds as f64).sqrt();
        assert!(rms < 3.0 / (p as f64).sqrt(), "P={p}: {rms}");
    }
}

#[test]
fn diffusion_correlation_at_ten_thousand_snapshots() {
    let g = graphtopo::samples::circuit_graph();
    let h = [0.3, 0.2, 0.5];
    let d = eig_sym(normalized_laplacian(&g, true).unwrap().matrix()).unwrap();
    let target = d.apply(|lam| (h[0] + h[1] * lam + h[2] * lam * lam).powi(2));
    let x = simulate(&g, &SimSpec::new(SimMode::Diffusion { h: h.to_vec() }, 42, 10_000).unwrap()).unwrap();
    let rel = (correlation_matrix(&x, false) - &target).norm() / target.norm();
    assert!(rel < 0.05, "{rel}");
}
