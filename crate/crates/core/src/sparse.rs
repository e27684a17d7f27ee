//! Soft thresholding, ISTA LASSO, graphical LASSO and precision matrices.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

pub fn soft_threshold(y: f64, t: f64) -> f64 {
    if y < -t {
        y + t
    } else if y > t {
        y - t
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LassoConfig {
    pub rho: f64,
    pub max_iter: usize,
    pub tol: f64,
    /// Record ‖y − AX_k‖² + ρ‖X_k‖₁ at every iterate.
    #[serde(default)]
    pub track_objective: bool,
}

impl LassoConfig {
    pub fn new(rho: f64) -> Self {
        Self { rho, max_iter: 1000, tol: 1e-8, track_objective: false }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn tracked(mut self) -> Self {
        self.track_objective = true;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho >= 0.0) || !self.rho.is_finite() {
            return Err(Error::invalid(format!("rho must be >= 0, got {}", self.rho)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be >= 1"));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("tol must be > 0, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LassoSolution {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Step size α = 1/(2λ_max(AᵀA)).
    pub alpha: f64,
    pub objective: Vec<f64>,
}

/// Largest eigenvalue of a symmetric PSD matrix by power iteration
/// (relative tolerance 1e-6, at most 500 iterations).
pub fn power_iteration_max_eig(g: &DMatrix<f64>) -> f64 {
    let n = g.nrows();
    if n == 0 {
        return 0.0;
    }
    // fixed, non-symmetric start so that structured inputs do not start orthogonal to the top vector
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.5 * (1.7 * i as f64 + 0.3).sin());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = g * &v;
        let next = v.dot(&w);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        v = w / norm;
        if (next - lambda).abs() <= 1e-6 * next.abs() {
            return next.max(norm);
        }
        lambda = next;
    }
    lambda
}

/// ISTA for min ‖y − AX‖² + ρ‖X‖₁ with X₀ = Aᵀy and step α = 1/(2λ_max(AᵀA)).
pub fn lasso_ista(a: &DMatrix<f64>, y: &DVector<f64>, cfg: &LassoConfig) -> Result<LassoSolution> {
    cfg.validate()?;
    if a.nrows() != y.len() {
        return Err(Error::dim(format!("A has {} rows, y has {} entries", a.nrows(), y.len())));
    }
    if a.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroMatrix);
    }
    let gram = a.transpose() * a;
    let aty = a.transpose() * y;
    Ok(lasso_gram(&gram, &aty, y.norm_squared(), cfg))
}

/// The same iteration expressed through G = AᵀA and c = Aᵀy.
fn lasso_gram(gram: &DMatrix<f64>, aty: &DVector<f64>, yty: f64, cfg: &LassoConfig) -> LassoSolution {
    let lambda_max = power_iteration_max_eig(gram);
    let alpha = 1.0 / (2.0 * lambda_max);
    let thresh = alpha * cfg.rho;
    let objective_of = |x: &DVector<f64>| {
        let quad = yty - 2.0 * aty.dot(x) + x.dot(&(gram * x));
        quad.max(0.0) + cfg.rho * x.lp_norm(1)
    };

    let mut x = aty.clone();
    let mut objective = Vec::new();
    if cfg.track_objective {
        objective.push(objective_of(&x));
    }
    let mut converged = false;
    let mut iterations = 0;
    for _ in 0..cfg.max_iter {
        let grad_step = (aty - gram * &x) * (2.0 * alpha) + &x;
        let next = grad_step.map(|v| soft_threshold(v, thresh));
        let delta = (&next - &x).norm();
        let scale = x.norm().max(1e-12);
        x = next;
        iterations += 1;
        if cfg.track_objective {
            objective.push(objective_of(&x));
        }
        if delta / scale < cfg.tol {
            converged = true;
            break;
        }
    }
    LassoSolution { x, iterations, converged, alpha, objective }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlassoConfig {
    pub rho: f64,
    pub max_sweeps: usize,
    pub eps: f64,
    /// Settings of the per-column LASSO; its `rho` is overridden by `self.rho`.
    pub inner: LassoConfig,
}

impl GlassoConfig {
    pub fn new(rho: f64) -> Self {
        Self { rho, max_sweeps: 100, eps: 1e-4, inner: LassoConfig::new(rho).with_max_iter(20_000).with_tol(1e-12) }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GlassoResult {
    pub q: DMatrix<f64>,
    /// Final covariance estimate V.
    pub v: DMatrix<f64>,
    pub sweeps: usize,
    pub converged: bool,
    pub inner_max_iterations: usize,
}

/// Graphical LASSO as a sequence of per-column LASSO problems.
///
/// Each sweep visits j = N-1 down to 0 and updates column and row j of V in place.
/// The sweep loop stops once the mean absolute change of V over a sweep drops below
/// `eps * mean|R - diag(R)|`.
pub fn glasso(r: &DMatrix<f64>, cfg: &GlassoConfig) -> Result<GlassoResult> {
    if !(cfg.rho >= 0.0) {
        return Err(Error::invalid(format!("rho must be >= 0, got {}", cfg.rho)));
    }
    let n = r.nrows();
    if !r.is_square() || n == 0 {
        return Err(Error::dim(format!("correlation matrix is {}x{}", r.nrows(), r.ncols())));
    }
    let asym = spectral::max_asymmetry(r);
    if asym > 1e-9 * r.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let r = (r + r.transpose()) * 0.5;
    let min_eig = spectral::eig_sym(&r)?.eigenvalues()[0];
    if min_eig < -1e-9 * r.amax().max(1.0) {
        return Err(Error::invalid(format!("correlation matrix is not PSD (min eigenvalue {min_eig:e})")));
    }
    let inner = LassoConfig { rho: cfg.rho, ..cfg.inner };
    inner.validate()?;

    let off_mean = {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += r[(i, j)].abs();
                }
            }
        }
        s / (n * n) as f64
    };
    let c_p = off_mean * cfg.eps;

    let mut v = &r + DMatrix::identity(n, n) * cfg.rho;
    let mut v0 = v.clone();
    let mut sweeps = 0;
    let mut converged = false;
    let mut inner_max = 0;
    for _ in 0..cfg.max_sweeps {
        sweeps += 1;
        for j in (0..n).rev() {
            if n == 1 {
                break;
            }
            let keep: Vec<usize> = (0..n).filter(|&k| k != j).collect();
            let v11 = DMatrix::from_fn(n - 1, n - 1, |a, b| v[(keep[a], keep[b])]);
            let r12 = DVector::from_fn(n - 1, |a, _| r[(keep[a], j)]);
            let (root, inv_root) = spectral::sym_sqrt_pair(&v11)?;
            let b = &inv_root * &r12;
            let beta = if root.iter().all(|&x| x == 0.0) {
                DVector::zeros(n - 1)
            } else {
                let sol = lasso_ista(&root, &b, &inner)?;
                inner_max = inner_max.max(sol.iterations);
                sol.x
            };
            let v12 = &v11 * beta;
            for (a, &k) in keep.iter().enumerate() {
                v[(k, j)] = v12[a];
                v[(j, k)] = v12[a];
            }
        }
        let change = (&v - &v0).abs().mean();
        if change < c_p {
            converged = true;
            break;
        }
        v0.copy_from(&v);
    }
    let q = spectral::inverse_sym(&v)?;
    Ok(GlassoResult { q, v, sweeps, converged, inner_max_iterations: inner_max })
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrecisionEstimate {
    pub q: DMatrix<f64>,
    pub rank: usize,
    /// Set when the input was rank deficient and a pseudo-inverse was used.
    pub rank_deficient: bool,
}

/// Exact inverse when full rank, otherwise the flagged pseudo-inverse.
pub fn precision_matrix(r: &DMatrix<f64>, rank_tol: f64) -> Result<PrecisionEstimate> {
    if !r.is_square() {
        return Err(Error::dim(format!("matrix is {}x{}", r.nrows(), r.ncols())));
    }
    let asym = spectral::max_asymmetry(r);
    if asym > 1e-9 * r.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    let n = r.nrows();
    let rank = spectral::rank(r, rank_tol);
    if rank == n {
        if let Some(inv) = r.clone().try_inverse() {
            let q = (&inv + inv.transpose()) * 0.5;
            return Ok(PrecisionEstimate { q, rank, rank_deficient: false });
        }
    }
    let q = spectral::pseudo_inverse(r, rank_tol);
    let q = (&q + q.transpose()) * 0.5;
    Ok(PrecisionEstimate { q, rank, rank_deficient: true })
}

/// C_mn / √(C_mm C_nn).
pub fn normalize_precision(q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !q.is_square() {
        return Err(Error::dim(format!("matrix is {}x{}", q.nrows(), q.ncols())));
    }
    let n = q.nrows();
    if let Some(i) = (0..n).find(|&i| !(q[(i, i)] > 0.0)) {
        return Err(Error::invalid(format!("diagonal entry {i} is {} (must be > 0)", q[(i, i)])));
    }
    let s: Vec<f64> = (0..n).map(|i| q[(i, i)].sqrt()).collect();
    Ok(DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { q[(i, j)] / (s[i] * s[j]) }))
}
