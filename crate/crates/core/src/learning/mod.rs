//! Topology inference from observed vertex signals.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{Graph, Laplacian, LaplacianKind};
use crate::sparse::{lasso_ista, LassoConfig};
use crate::spectral;

mod polyfit;
mod smooth;

pub use polyfit::{polynomial_fit_eigenvalues, spectral_topology_full, PolyFit, PolyFitConfig, SPECTRAL_FULL_MAX_N};
pub use smooth::{smooth_learn, SmoothLearnResult};

/// N×P matrix whose column p is the snapshot x_p.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationMatrix {
    x: DMatrix<f64>,
    centered: bool,
}

impl ObservationMatrix {
    pub fn new(x: DMatrix<f64>) -> Result<Self> {
        if x.ncols() == 0 {
            return Err(Error::invalid("observation matrix needs at least one snapshot"));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("observation matrix has non-finite entries"));
        }
        Ok(Self { x, centered: false })
    }

    /// Copy with the per-vertex mean removed from every row.
    pub fn centered(&self) -> Self {
        let mut x = self.x.clone();
        for mut row in x.row_iter_mut() {
            let mean = row.mean();
            row.add_scalar_mut(-mean);
        }
        Self { x, centered: true }
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn data(&self) -> &DMatrix<f64> {
        &self.x
    }

    pub fn into_data(self) -> DMatrix<f64> {
        self.x
    }

    /// Vertex count.
    pub fn n(&self) -> usize {
        self.x.nrows()
    }

    /// Snapshot count.
    pub fn p(&self) -> usize {
        self.x.ncols()
    }
}

/// (1/P) X Xᵀ, after removing per-vertex means when `center` is set.
pub fn correlation_matrix(x: &ObservationMatrix, center: bool) -> DMatrix<f64> {
    let data = if center { x.centered().x } else { x.x.clone() };
    let r = &data * data.transpose() / x.p() as f64;
    (&r + r.transpose()) * 0.5
}

/// Regression coefficients β_nm with a zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaMatrix(DMatrix<f64>);

impl BetaMatrix {
    pub fn new(b: DMatrix<f64>) -> Result<Self> {
        if !b.is_square() {
            return Err(Error::dim(format!("coefficient matrix is {}x{}", b.nrows(), b.ncols())));
        }
        if (0..b.nrows()).any(|i| b[(i, i)] != 0.0) {
            return Err(Error::invalid("coefficient matrix must have a zero diagonal"));
        }
        Ok(Self(b))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn n(&self) -> usize {
        self.0.nrows()
    }
}

/// Row n holds lasso(Y_nᵀ, y_nᵀ, ρ), where Y_n is X without row n.
pub fn neighborhood_regression(x: &ObservationMatrix, cfg: &LassoConfig) -> Result<BetaMatrix> {
    cfg.validate()?;
    let n = x.n();
    if x.p() < 2 {
        return Err(Error::invalid(format!("regression needs P >= 2 snapshots, got {}", x.p())));
    }
    if n <= 1 {
        return BetaMatrix::new(DMatrix::zeros(n, n));
    }
    let data = x.data();
    let rows: Vec<Result<DVector<f64>>> = (0..n)
        .into_par_iter()
        .map(|row| {
            let others: Vec<usize> = (0..n).filter(|&k| k != row).collect();
            let a = DMatrix::from_fn(x.p(), n - 1, |p, c| data[(others[c], p)]);
            let y = data.row(row).transpose();
            let sol = lasso_ista(&a, &y, cfg).map_err(|e| Error::Row { row, source: Box::new(e) })?;
            let mut full = DVector::zeros(n);
            for (c, &k) in others.iter().enumerate() {
                full[k] = sol.x[c];
            }
            Ok(full)
        })
        .collect();
    let mut b = DMatrix::zeros(n, n);
    for (row, r) in rows.into_iter().enumerate() {
        b.set_row(row, &r?.transpose());
    }
    BetaMatrix::new(b)
}

/// W_nm = √(β_nm β_mn). Pairs with a negative member are zeroed when `clamp_negative`
/// is set and rejected otherwise.
pub fn symmetrize_geometric(b: &BetaMatrix, clamp_negative: bool) -> Result<Graph> {
    let n = b.n();
    let m = b.matrix();
    let mut w = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let (a, c) = (m[(i, j)], m[(j, i)]);
            let v = if a < 0.0 || c < 0.0 {
                if !clamp_negative {
                    return Err(Error::invalid(format!("negative coefficient in pair ({i},{j}): {a}, {c}")));
                }
                0.0
            } else {
                (a * c).sqrt()
            };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Graph::new(w)
}

/// W_nm = √(|β_nm| |β_mn|), for coefficients whose sign carries no edge information.
pub fn symmetrize_magnitude(b: &BetaMatrix) -> Graph {
    let m = b.matrix();
    let n = b.n();
    let w = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (m[(i, j)].abs() * m[(j, i)].abs()).sqrt() });
    Graph::new(w).expect("magnitudes are symmetric and non-negative")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceBranch {
    PseudoInverse,
    Lasso,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceLearning {
    pub laplacian: Laplacian,
    /// ‖L − Lᵀ‖_F of the estimate before symmetrization.
    pub asymmetry: f64,
    pub branch: SourceBranch,
}

/// Laplacian from signals X and source injections J satisfying L X = J.
///
/// The last vertex is the reference. With P >= N−1 and a full-rank reduced signal matrix
/// the reduced Laplacian is J·pinv(X); otherwise each row is a LASSO problem, which needs `rho`.
pub fn learn_from_sources(x: &DMatrix<f64>, j: &DMatrix<f64>, rho: Option<f64>) -> Result<SourceLearning> {
    let (n, p) = x.shape();
    if j.shape() != (n, p) {
        return Err(Error::dim(format!("signals are {n}x{p}, sources are {}x{}", j.nrows(), j.ncols())));
    }
    if n < 2 || p == 0 {
        return Err(Error::invalid("need at least 2 vertices and one snapshot"));
    }
    let m = n - 1;
    let xr = DMatrix::from_fn(m, p, |r, c| x[(r, c)] - x[(m, c)]);
    let jr = j.rows(0, m).clone_owned();

    let full_rank = p >= m && spectral::rank(&xr, 1e-10) == m;
    let (reduced, branch) = if full_rank {
        (&jr * spectral::pseudo_inverse(&xr, 1e-10), SourceBranch::PseudoInverse)
    } else {
        let rho = rho.ok_or_else(|| {
            Error::Singular(format!(
                "reduced signal matrix has rank below {m} (P = {p}); supply rho to use the LASSO branch"
            ))
        })?;
        let cfg = LassoConfig::new(rho).with_max_iter(50_000).with_tol(1e-10);
        let a = xr.transpose();
        let rows: Vec<Result<DVector<f64>>> = (0..m)
            .into_par_iter()
            .map(|k| {
                let y = jr.row(k).transpose();
                lasso_ista(&a, &y, &cfg).map(|s| s.x).map_err(|e| Error::Row { row: k, source: Box::new(e) })
            })
            .collect();
        let mut red = DMatrix::zeros(m, m);
        for (k, r) in rows.into_iter().enumerate() {
            red.set_row(k, &r?.transpose());
        }
        (red, SourceBranch::Lasso)
    };

    let mut l = DMatrix::zeros(n, n);
    l.view_mut((0, 0), (m, m)).copy_from(&reduced);
    for k in 0..m {
        l[(k, m)] = -reduced.row(k).sum();
        l[(m, k)] = -reduced.column(k).sum();
    }
    l[(m, m)] = reduced.sum();
    let asymmetry = (&l - l.transpose()).norm();
    Ok(SourceLearning { laplacian: Laplacian::from_estimate(l, LaplacianKind::Combinatorial), asymmetry, branch })
}

/// Weights from a precision matrix: W_mn = |Q̄_mn| off the diagonal, where Q̄ has a unit diagonal.
pub fn precision_weights(q: &DMatrix<f64>) -> Result<Graph> {
    let qn = crate::sparse::normalize_precision(q)?;
    let n = qn.nrows();
    let w = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 0.5 * (qn[(i, j)].abs() + qn[(j, i)].abs()) });
    Graph::new(w)
}

/// 10·log10 of the mean squared difference over all N² entries.
pub fn mse_db(estimate: &DMatrix<f64>, truth: &DMatrix<f64>) -> Result<f64> {
    if estimate.shape() != truth.shape() {
        return Err(Error::dim("estimate and ground truth differ in shape"));
    }
    let mse = (estimate - truth).map(|v| v * v).mean();
    Ok(10.0 * mse.log10())
}
