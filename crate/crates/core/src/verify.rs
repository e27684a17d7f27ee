//! Self-check suites run by `graphtopo verify`: worked examples with known answers plus seeded
//! property checks.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use crate::graph::{laplacian, normalized_laplacian, Graph, LaplacianKind};
use crate::lattice::{kron_sum_adjacency, path_adjacency, separable_gdft, Lattice};
use crate::learning::{neighborhood_regression, symmetrize_geometric, ObservationMatrix};
use crate::physical::{
    absorbing_probabilities, circuit_solve, harmonic_labels, hitting_times, label_propagation, pagerank,
    BoundaryCondition, ResistanceMetric,
};
use crate::portfolio::{allocate, cluster_weights, AllocationScheme, CutTree};
use crate::samples;
use crate::sparse::{
    glasso, lasso_ista, normalize_precision, precision_matrix, soft_threshold, GlassoConfig, LassoConfig,
};
use crate::spectral::eig_sym;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

fn run_check(suite: &'static str, name: &'static str, f: impl FnOnce() -> Result<String, String>) -> Check {
    let start = Instant::now();
    let (passed, detail) = match std::panic::catch_unwind(std::panic::AssertUnwindSafe(f)) {
        Ok(Ok(d)) => (true, d),
        Ok(Err(d)) => (false, d),
        Err(_) => (false, "check panicked".to_string()),
    };
    Check { suite, name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn max_err(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn within(label: &str, err: f64, tol: f64) -> Result<String, String> {
    let msg = format!("{label}: max error {err:.3e} (tol {tol:e})");
    if err <= tol {
        Ok(msg)
    } else {
        Err(msg)
    }
}

fn e<T: std::fmt::Display>(x: T) -> String {
    x.to_string()
}

/// Correlation of the four-vertex chain x(n) = x(n−1) + ν_n.
pub fn chain_correlation() -> DMatrix<f64> {
    DMatrix::from_fn(4, 4, |i, j| (i.min(j) + 1) as f64)
}

pub fn golden_suite() -> Vec<Check> {
    const S: &str = "golden";
    vec![
        run_check(S, "precision matrix of chain correlation", || {
            let est = precision_matrix(&chain_correlation(), 1e-12).map_err(e)?;
            let c = DMatrix::from_row_slice(
                4,
                4,
                &[2.0, -1.0, 0.0, 0.0, -1.0, 2.0, -1.0, 0.0, 0.0, -1.0, 2.0, -1.0, 0.0, 0.0, -1.0, 1.0],
            );
            within("precision", (&est.q - c).amax(), 1e-10)?;
            let norm = normalize_precision(&est.q).map_err(e)?;
            within("normalized (2,3)", (norm[(2, 3)] + 0.5f64.sqrt()).abs(), 1e-12)
        }),
        run_check(S, "regression weights of chain data", || {
            let x =
                ObservationMatrix::new(chain_correlation().cholesky().expect("positive definite").l()).map_err(e)?;
            let cfg = LassoConfig::new(0.0).with_max_iter(200_000).with_tol(1e-15);
            let beta = neighborhood_regression(&x, &cfg).map_err(e)?;
            within(
                "beta_0",
                max_err(&beta.matrix().row(0).iter().copied().collect::<Vec<_>>(), &[0.0, 0.5, 0.0, 0.0]),
                1e-6,
            )?;
            let w = symmetrize_geometric(&beta, true).map_err(e)?;
            let r = 0.5f64.sqrt();
            let expected = [0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, r, 0.0, 0.0, r, 0.0];
            within("W", (w.weights() - DMatrix::from_row_slice(4, 4, &expected)).amax(), 1e-6)
        }),
        run_check(S, "pagerank of eight pages", || {
            let pr = pagerank(&samples::page_graph(), None, 1e-6, 1000).map_err(e)?;
            let expected = [1.33, 1.52, 2.18, 0.79, 0.55, 0.18, 0.48, 0.97];
            within(&format!("ranks after {} iterations", pr.iterations), max_err(pr.rank.as_slice(), &expected), 0.01)
        }),
        run_check(S, "circuit with pinned potentials", || {
            let g = samples::circuit_graph();
            let l = laplacian(&g, LaplacianKind::Combinatorial).map_err(e)?;
            let bc = BoundaryCondition::from_pairs([(2, 7.13), (5, 8.18), (7, 0.0)]).map_err(e)?;
            let x = circuit_solve(&l, &bc, None).map_err(e)?;
            let got = [x[0], x[1], x[3], x[4], x[6]];
            within("free potentials", max_err(&got, &[6.71, 6.88, 5.25, 6.67, 2.62]), 0.01)
        }),
        run_check(S, "absorbing probabilities on social graph", || {
            let bc = BoundaryCondition::from_pairs([(4, 1.0), (3, 0.0)]).map_err(e)?;
            let x = absorbing_probabilities(&samples::social_graph(), &bc).map_err(e)?;
            within("probabilities", max_err(x.as_slice(), &[0.375, 0.625, 0.5, 0.0, 1.0, 0.875, 0.375, 0.75]), 1e-3)
        }),
        run_check(S, "hitting and commute times", || {
            let g = samples::circuit_graph();
            let h = hitting_times(&g, 3).map_err(e)?;
            let expected = [9.0155, 11.3003, 9.5942, 0.0, 12.6594, 13.1427, 6.1930, 10.3860];
            within("hitting times", max_err(h.as_slice(), &expected), 1e-3)?;
            let metric = ResistanceMetric::new(&g).map_err(e)?;
            within("R_eff(7,0)", (metric.resistance(7, 0) - 4.0745).abs(), 1e-3)?;
            within("CT(7,0)", (metric.commute_time(7, 0) - 30.3960).abs(), 1e-3)?;
            let h0 = hitting_times(&g, 0).map_err(e)?;
            let h7 = hitting_times(&g, 7).map_err(e)?;
            within("CT = h(0,7) + h(7,0)", (metric.commute_time(7, 0) - h7[0] - h0[7]).abs(), 1e-6)
        }),
        run_check(S, "glasso without penalty inverts", || {
            let mut worst: f64 = 0.0;
            for seed in 0..5 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let b: DMatrix<f64> = DMatrix::from_fn(10, 10, |_, _| StandardNormal.sample(&mut rng));
                let r = &b * b.transpose() / 10.0 + DMatrix::identity(10, 10);
                let res = glasso(&r, &GlassoConfig::new(0.0)).map_err(e)?;
                worst = worst.max((&res.q * &r - DMatrix::identity(10, 10)).amax());
            }
            within("|QR - I|", worst, 1e-3)
        }),
        run_check(S, "lattice spectra", || {
            for dims in [vec![3, 4], vec![2, 3, 2]] {
                let lat = Lattice::new(dims).map_err(e)?;
                let sep = separable_gdft(&lat).map_err(e)?;
                let dense = eig_sym(kron_sum_adjacency(&lat).map_err(e)?.weights()).map_err(e)?;
                within("spectrum", (sep.eigenvalues() - dense.eigenvalues()).amax(), 1e-9)?;
            }
            for i in 1..=6 {
                let ev = eig_sym(path_adjacency(i).weights()).map_err(e)?;
                let mut expected: Vec<f64> =
                    (1..=i).map(|k| 2.0 * (k as f64 * std::f64::consts::PI / (i + 1) as f64).cos()).collect();
                expected.sort_by(f64::total_cmp);
                within("path spectrum", max_err(ev.eigenvalues().as_slice(), &expected), 1e-10)?;
            }
            Ok("separable and dense spectra agree".into())
        }),
        run_check(S, "allocation of five-leaf tree", || {
            let mut t = CutTree::root(8);
            let (a, b) = t.split(0, &[0, 1, 2, 3]).map_err(e)?;
            t.split(a, &[0, 1]).map_err(e)?;
            let (_, bb) = t.split(b, &[4, 5]).map_err(e)?;
            t.split(bb, &[6]).map_err(e)?;
            let w1 = cluster_weights(&t, AllocationScheme::As1);
            within("AS1", max_err(&w1, &[0.25, 0.25, 0.25, 0.125, 0.125]), 0.0)?;
            let w2 = cluster_weights(&t, AllocationScheme::As2);
            within("AS2", max_err(&w2, &[0.2; 5]), 0.0)?;
            within("asset sum", (allocate(&t, AllocationScheme::As1).map_err(e)?.sum() - 1.0).abs(), 1e-12)
        }),
    ]
}

/// Mean and standard error of the number of steps a random walk from `start` takes to reach `target`.
pub fn hitting_time_monte_carlo(g: &Graph, start: usize, target: usize, walks: usize, seed: u64) -> (f64, f64) {
    let n = g.n();
    let d = g.degrees();
    let cumulative: Vec<Vec<f64>> = (0..n)
        .map(|u| {
            let mut acc = 0.0;
            (0..n)
                .map(|v| {
                    acc += g.weight(u, v) / d[u];
                    acc
                })
                .collect()
        })
        .collect();
    const CHUNKS: usize = 64;
    let per = walks.div_ceil(CHUNKS);
    let sums: Vec<(f64, f64, usize)> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let count = per.min(walks.saturating_sub(c * per));
            let (mut s, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let mut u = start;
                let mut steps = 0u64;
                while u != target {
                    let r: f64 = rng.random();
                    let row = &cumulative[u];
                    u = row
                        .iter()
                        .position(|&p| r < p)
                        .unwrap_or_else(|| row.iter().rposition(|&p| p > 0.0).unwrap_or(0));
                    steps += 1;
                }
                s += steps as f64;
                s2 += (steps * steps) as f64;
            }
            (s, s2, count)
        })
        .collect();
    let (s, s2, m) = sums.iter().fold((0.0, 0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
    let m = m as f64;
    let mean = s / m;
    let var = (s2 / m - mean * mean) * m / (m - 1.0);
    (mean, (var / m).sqrt())
}

pub fn property_suite(walks: usize) -> Vec<Check> {
    const S: &str = "property";
    vec![
        run_check(S, "laplacian row sums and PSD floor", || {
            let mut worst_row: f64 = 0.0;
            let mut worst_eig: f64 = 0.0;
            for seed in 0..50 {
                let g = samples::random_connected_graph(3 + (seed as usize % 10), 0.3, seed);
                let l = laplacian(&g, LaplacianKind::Combinatorial).map_err(e)?;
                for row in l.matrix().row_iter() {
                    worst_row = worst_row.max(row.sum().abs());
                }
                let ln = normalized_laplacian(&g, true).map_err(e)?;
                for m in [l.matrix(), ln.matrix()] {
                    worst_eig = worst_eig.min(eig_sym(m).map_err(e)?.eigenvalues()[0]);
                }
            }
            within("row sums", worst_row, 1e-12)?;
            within("min eigenvalue below zero", -worst_eig, 1e-10)
        }),
        run_check(S, "soft threshold contraction", || {
            let mut rng = ChaCha8Rng::seed_from_u64(1);
            for _ in 0..10_000 {
                let (a, b): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
                let t = rng.random_range(0.0..3.0);
                if (soft_threshold(a, t) - soft_threshold(b, t)).abs() > (a - b).abs() + 1e-15 {
                    return Err(format!("expansion at a={a}, b={b}, t={t}"));
                }
                if soft_threshold(a, t).abs() > a.abs() {
                    return Err(format!("magnitude grew at a={a}, t={t}"));
                }
            }
            Ok("10000 samples".into())
        }),
        run_check(S, "ISTA objective is non-increasing", || {
            for seed in 0..10 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let a = DMatrix::from_fn(30, 20, |_, _| StandardNormal.sample(&mut rng));
                let y = DVector::from_fn(30, |_, _| StandardNormal.sample(&mut rng));
                let sol = lasso_ista(&a, &y, &LassoConfig::new(0.5).with_max_iter(300).tracked()).map_err(e)?;
                if let Some(w) = sol.objective.windows(2).find(|w| w[1] > w[0] * (1.0 + 1e-12) + 1e-12) {
                    return Err(format!("seed {seed}: {} -> {}", w[0], w[1]));
                }
            }
            Ok("10 seeded problems".into())
        }),
        run_check(S, "hitting times agree with random walks", || {
            let mut report = Vec::new();
            for seed in 0..2u64 {
                let g = samples::random_connected_graph(5 + seed as usize, 0.4, 100 + seed);
                let target = 0;
                let exact = hitting_times(&g, target).map_err(e)?;
                let start = g.n() - 1;
                let (mean, se) = hitting_time_monte_carlo(&g, start, target, walks, 7 + seed);
                let z = (mean - exact[start]) / se;
                report.push(format!("N={} z={z:.2}", g.n()));
                if z.abs() > 3.0 {
                    return Err(format!("N={}: exact {} vs {mean} ± {se}", g.n(), exact[start]));
                }
            }
            Ok(report.join(", "))
        }),
        run_check(S, "label propagation reaches the harmonic solution", || {
            let mut worst: f64 = 0.0;
            for seed in 0..20 {
                let g = samples::random_connected_graph(10, 0.3, 500 + seed);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let labels =
                    BoundaryCondition::from_pairs([(0, 0.0), (4, 1.0), (9, rng.random_range(0.0..1.0))]).map_err(e)?;
                let it = label_propagation(&g, &labels, 200_000, 1e-14).map_err(e)?;
                let direct = harmonic_labels(&g, &labels).map_err(e)?;
                worst = worst.max((it.scores - direct).amax());
            }
            within("iterative vs direct", worst, 1e-8)
        }),
    ]
}

/// Both suites; `walks` sets the Monte-Carlo sample size.
pub fn run_all(walks: usize) -> Vec<Check> {
    let mut checks = golden_suite();
    checks.extend(property_suite(walks));
    checks
}
