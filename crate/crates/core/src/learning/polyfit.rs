use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Laplacian, LaplacianKind};
use crate::spectral::{eig_sym, SpectralDecomp};

/// Largest N accepted by [`spectral_topology_full`].
pub const SPECTRAL_FULL_MAX_N: usize = 30;

const SUBGRADIENT_ITERS: usize = 4000;

fn l1_entrywise(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|v| v.abs()).sum()
}

/// Eigenvalues λ_k on the eigenvectors of `r` minimizing ‖Σ λ_k u_k u_kᵀ‖₁ subject to
/// λ_0 = 0, λ_k >= 0 and Σ λ_k = N, by projected subgradient descent. Returns the best iterate.
pub fn spectral_topology_full(r: &DMatrix<f64>) -> Result<Laplacian> {
    let n = r.nrows();
    if n > SPECTRAL_FULL_MAX_N {
        return Err(Error::SizeGuard(format!("N = {n} exceeds {SPECTRAL_FULL_MAX_N}")));
    }
    if n < 2 {
        return Err(Error::invalid("need at least 2 vertices"));
    }
    let eig = eig_sym(r)?;
    let u = eig.eigenvectors();
    let free = n - 1;
    let total = n as f64;
    let build = |lam: &[f64]| {
        let mut d = DVector::zeros(n);
        for (k, &v) in lam.iter().enumerate() {
            d[k + 1] = v;
        }
        u * DMatrix::from_diagonal(&d) * u.transpose()
    };

    let mut lam = vec![total / free as f64; free];
    let mut best_l = build(&lam);
    let mut best = l1_entrywise(&best_l);
    if free == 1 {
        return Ok(Laplacian::from_estimate(best_l, LaplacianKind::Combinatorial));
    }
    let step0 = total / free as f64;
    for t in 0..SUBGRADIENT_ITERS {
        let l = build(&lam);
        let sign = l.map(|v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        });
        let grad: Vec<f64> = (0..free)
            .map(|k| {
                let col = u.column(k + 1);
                col.dot(&(&sign * col))
            })
            .collect();
        let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            break;
        }
        let step = step0 / ((t + 1) as f64).sqrt() / gnorm;
        let moved: Vec<f64> = lam.iter().zip(&grad).map(|(l, g)| l - step * g).collect();
        lam = project_simplex(&moved, total);
        let cand = build(&lam);
        let val = l1_entrywise(&cand);
        if val < best {
            best = val;
            best_l = cand;
        }
    }
    Ok(Laplacian::from_estimate(best_l, LaplacianKind::Combinatorial))
}

fn project_simplex(v: &[f64], s: f64) -> Vec<f64> {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (k, &x) in u.iter().enumerate() {
        cum += x;
        let t = (cum - s) / (k + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|x| (x - theta).max(0.0)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolyFitConfig {
    /// System order M.
    pub m: usize,
    /// Grid points per free knot ξ_1..ξ_{M−1}.
    pub grid_points: usize,
}

impl PolyFitConfig {
    /// Default grid: 50 points for M = 2, 25 for M = 3, 10 beyond.
    pub fn new(m: usize) -> Self {
        let grid_points = match m {
            0..=2 => 50,
            3 => 25,
            _ => 10,
        };
        Self { m, grid_points }
    }

    pub fn validate(&self) -> Result<()> {
        if self.m < 1 {
            return Err(Error::invalid("system order M must be >= 1"));
        }
        if self.grid_points < 2 {
            return Err(Error::invalid("grid_points must be >= 2"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolyFit {
    /// λ̂_k, ascending, λ̂_0 = 0, Σ λ̂_k = N.
    pub eigenvalues: DVector<f64>,
    pub laplacian: Laplacian,
    /// Knots ξ_0 = 0, ξ_1..ξ_{M−1}, ξ_M = 1 of the selected fit.
    pub xi: Vec<f64>,
    /// ‖L‖₁ / √‖L‖_F of the selected fit.
    pub sparsity: f64,
    pub candidates: usize,
    pub skipped_non_monotone: usize,
}

/// Knot indices m_i = round(i (N−1) / M), i = 0..M.
pub fn knot_indices(n: usize, m: usize) -> Vec<usize> {
    (0..=m).map(|i| ((i * (n - 1)) as f64 / m as f64).round() as usize).collect()
}

fn lagrange(xs: &[f64], ys: &[f64], t: f64) -> f64 {
    let mut acc = 0.0;
    for (i, (&xi, &yi)) in xs.iter().zip(ys).enumerate() {
        let mut basis = 1.0;
        for (j, &xj) in xs.iter().enumerate() {
            if i != j {
                basis *= (t - xj) / (xi - xj);
            }
        }
        acc += yi * basis;
    }
    acc
}

const MONOTONE_SAMPLES: usize = 2000;

fn bisect(f: impl Fn(f64) -> f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    while hi - lo > 1e-10 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Eigenvalue estimates for one knot placement, or `None` when the polynomial is not
/// monotone on [0, 1].
fn fit_for_knots(h: &[f64], knots: &[usize], xi: &[f64]) -> Option<DVector<f64>> {
    let ys: Vec<f64> = knots.iter().map(|&k| h[k]).collect();
    let p = |t: f64| lagrange(xi, &ys, t);
    let mut prev = p(0.0);
    for s in 1..=MONOTONE_SAMPLES {
        let cur = p(s as f64 / MONOTONE_SAMPLES as f64);
        if cur < prev {
            return None;
        }
        prev = cur;
    }
    let (h0, h1) = (h[0], h[h.len() - 1]);
    let bar: Vec<f64> = h
        .iter()
        .map(|&hk| {
            if hk <= h0 {
                0.0
            } else if hk >= h1 {
                1.0
            } else {
                bisect(p, hk)
            }
        })
        .collect();
    let total: f64 = bar.iter().sum();
    let n = h.len() as f64;
    Some(DVector::from_iterator(h.len(), bar.iter().map(|b| b * n / total)))
}

fn sparsity_measure(l: &DMatrix<f64>) -> f64 {
    l1_entrywise(l) / l.norm().sqrt()
}

/// Free-knot candidates on a uniform interior grid, strictly increasing, in lexicographic order.
fn knot_grid(free: usize, points: usize) -> Vec<Vec<f64>> {
    let grid: Vec<f64> = (1..=points).map(|g| g as f64 / (points + 1) as f64).collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; free];
    if free == 0 {
        return vec![vec![]];
    }
    loop {
        if idx.windows(2).all(|w| w[0] < w[1]) {
            out.push(idx.iter().map(|&i| grid[i]).collect());
        }
        let mut d = free;
        loop {
            if d == 0 {
                return out;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < points {
                break;
            }
            idx[d] = 0;
        }
    }
}

/// Polynomial fitting of the Laplacian eigenvalues from the eigendecomposition of `r`.
///
/// H(λ_k) = √(eigenvalue k of r), ascending. A degree-M Lagrange polynomial through
/// (0, H_0), (ξ_i, H_{m_i}) and (1, H_{N−1}) is inverted per k by bisection, the roots are
/// rescaled to sum to N, and the free knots ξ are chosen on a grid to minimize
/// ‖L‖₁/√‖L‖_F of L = U Λ̂ Uᵀ. Ties go to the earliest grid candidate.
pub fn polynomial_fit_eigenvalues(r: &DMatrix<f64>, cfg: &PolyFitConfig) -> Result<PolyFit> {
    cfg.validate()?;
    let n = r.nrows();
    if n < 2 {
        return Err(Error::invalid("need at least 2 vertices"));
    }
    if cfg.m > n - 1 {
        return Err(Error::invalid(format!("order M = {} exceeds N − 1 = {}", cfg.m, n - 1)));
    }
    let eig: SpectralDecomp = eig_sym(r)?;
    let h: Vec<f64> = eig.eigenvalues().iter().map(|&v| v.max(0.0).sqrt()).collect();
    if h[n - 1] - h[0] <= 1e-12 * h[n - 1].max(1.0) {
        return Err(Error::invalid("correlation spectrum is flat; eigenvalues are not identifiable"));
    }
    let knots = knot_indices(n, cfg.m);
    let candidates = knot_grid(cfg.m - 1, cfg.grid_points);
    let u = eig.eigenvectors();
    let evaluated: Vec<Option<(DVector<f64>, DMatrix<f64>, f64)>> = candidates
        .par_iter()
        .map(|free| {
            let mut xi = Vec::with_capacity(cfg.m + 1);
            xi.push(0.0);
            xi.extend_from_slice(free);
            xi.push(1.0);
            fit_for_knots(&h, &knots, &xi).map(|lam| {
                let l = u * DMatrix::from_diagonal(&lam) * u.transpose();
                let s = sparsity_measure(&l);
                (lam, l, s)
            })
        })
        .collect();

    let skipped = evaluated.iter().filter(|e| e.is_none()).count();
    let mut best: Option<(usize, f64)> = None;
    for (i, e) in evaluated.iter().enumerate() {
        if let Some((_, _, s)) = e {
            if best.is_none_or(|(_, b)| *s < b) {
                best = Some((i, *s));
            }
        }
    }
    let (idx, sparsity) = best.ok_or_else(|| Error::NoConvergence {
        what: "no monotone polynomial on the knot grid; use a larger grid or a smaller order".into(),
        iterations: candidates.len(),
    })?;
    let (lam, l, _) = evaluated.into_iter().nth(idx).flatten().expect("selected candidate exists");
    let mut xi = vec![0.0];
    xi.extend_from_slice(&candidates[idx]);
    xi.push(1.0);
    Ok(PolyFit {
        eigenvalues: lam,
        laplacian: Laplacian::from_estimate(l, LaplacianKind::Combinatorial),
        xi,
        sparsity,
        candidates: candidates.len(),
        skipped_non_monotone: skipped,
    })
}
