//! Symmetric eigendecomposition, pseudo-inverse and matrix square roots.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

pub(crate) const SYMMETRY_TOL: f64 = 1e-9;

/// Ascending eigenvalues with orthonormal eigenvector columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralDecomp {
    eigenvalues: DVector<f64>,
    eigenvectors: DMatrix<f64>,
}

impl SpectralDecomp {
    /// Sorts the pairs ascending and applies the sign convention.
    pub fn from_parts(eigenvalues: DVector<f64>, eigenvectors: DMatrix<f64>) -> Result<Self> {
        let n = eigenvalues.len();
        if eigenvectors.nrows() != n || eigenvectors.ncols() != n {
            return Err(Error::dim("eigenvector matrix must be N x N"));
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eigenvalues[a].total_cmp(&eigenvalues[b]).then(a.cmp(&b)));
        let values = DVector::from_iterator(n, order.iter().map(|&k| eigenvalues[k]));
        let mut vectors = DMatrix::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            let mut col = eigenvectors.column(src).clone_owned();
            fix_sign(&mut col);
            vectors.set_column(dst, &col);
        }
        Ok(Self { eigenvalues: values, eigenvectors: vectors })
    }

    pub fn eigenvalues(&self) -> &DVector<f64> {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &DMatrix<f64> {
        &self.eigenvectors
    }

    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    /// k-th eigenvector as an owned column.
    pub fn vector(&self, k: usize) -> DVector<f64> {
        self.eigenvectors.column(k).clone_owned()
    }

    /// U diag(f(λ)) Uᵀ.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let d = self.eigenvalues.map(f);
        let scaled = &self.eigenvectors * DMatrix::from_diagonal(&d);
        scaled * self.eigenvectors.transpose()
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.apply(|x| x)
    }
}

/// The largest-magnitude entry is made positive; near-ties go to the lowest index.
fn fix_sign(v: &mut DVector<f64>) {
    let top = v.amax();
    if top == 0.0 {
        return;
    }
    let pivot = v.iter().position(|x| x.abs() >= top * (1.0 - 1e-9)).unwrap_or(0);
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
}

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    (m - m.transpose()).amax()
}

/// Eigendecomposition of a symmetric matrix (symmetry tolerance 1e-9 relative to the largest entry).
pub fn eig_sym(m: &DMatrix<f64>) -> Result<SpectralDecomp> {
    if !m.is_square() {
        return Err(Error::dim(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL * m.amax().max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(asym));
    }
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    SpectralDecomp::from_parts(eig.eigenvalues, eig.eigenvectors)
}

/// One singular triplet: `m ≈ Σ σ u vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SingularTriplet {
    pub sigma: f64,
    pub u: DVector<f64>,
    pub v: DVector<f64>,
}

/// The `min(rows, cols)` singular triplets of `m`, largest first.
///
/// Taken from the symmetric eigendecomposition of [[0, M], [Mᵀ, 0]], whose eigenvalues are ±σ
/// with eigenvectors [u; ±v]/√2. The dense SVD in nalgebra 0.35 loses accuracy on some small
/// symmetric inputs; the symmetric eigensolver does not.
pub fn singular_triplets(m: &DMatrix<f64>) -> Vec<SingularTriplet> {
    let (r, c) = m.shape();
    if r == 0 || c == 0 {
        return Vec::new();
    }
    let mut h = DMatrix::zeros(r + c, r + c);
    h.view_mut((0, r), (r, c)).copy_from(m);
    h.view_mut((r, 0), (c, r)).copy_from(&m.transpose());
    let eig = SymmetricEigen::new(h);
    let mut order: Vec<usize> = (0..r + c).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let unit = |x: DVector<f64>| {
        let norm = x.norm();
        if norm > 0.0 {
            x / norm
        } else {
            x
        }
    };
    order
        .into_iter()
        .take(r.min(c))
        .map(|k| {
            let z = eig.eigenvectors.column(k);
            SingularTriplet {
                sigma: eig.eigenvalues[k].max(0.0),
                u: unit(z.rows(0, r).into_owned()),
                v: unit(z.rows(r, c).into_owned()),
            }
        })
        .collect()
}

/// Moore-Penrose pseudo-inverse; singular values below `rank_tol * σ_max` are dropped.
pub fn pseudo_inverse(m: &DMatrix<f64>, rank_tol: f64) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::zeros(c, r);
    let triplets = singular_triplets(m);
    let Some(smax) = triplets.first().map(|t| t.sigma) else {
        return out;
    };
    let cut = rank_tol * smax;
    for t in triplets.iter().filter(|t| t.sigma > cut && t.sigma > 0.0) {
        out += &t.v * t.u.transpose() * (1.0 / t.sigma);
    }
    out
}

/// Numerical rank with the same cutoff rule as [`pseudo_inverse`].
pub fn rank(m: &DMatrix<f64>, rank_tol: f64) -> usize {
    let triplets = singular_triplets(m);
    let Some(smax) = triplets.first().map(|t| t.sigma) else {
        return 0;
    };
    triplets.iter().filter(|t| t.sigma > rank_tol * smax && t.sigma > 0.0).count()
}

/// Symmetric PSD square root and its (pseudo-)inverse, negative eigenvalues clamped at 0.
pub fn sym_sqrt_pair(m: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let eig = eig_sym(m)?;
    let top = eig.eigenvalues().amax();
    let floor = top * 1e-14;
    let root = eig.apply(|x| x.max(0.0).sqrt());
    let inv_root = eig.apply(|x| if x > floor { 1.0 / x.sqrt() } else { 0.0 });
    Ok((root, inv_root))
}

/// Condition number λ_max/λ_min of a symmetric matrix (infinite when λ_min <= 0).
pub fn condition_sym(m: &DMatrix<f64>) -> Result<f64> {
    let eig = eig_sym(m)?;
    let vals = eig.eigenvalues();
    let lo = vals.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    let hi = vals.amax();
    Ok(if lo > 0.0 { hi / lo } else { f64::INFINITY })
}

/// Inverse of a symmetric matrix, rejecting numerically singular input.
pub fn inverse_sym(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let cond = condition_sym(m)?;
    if !cond.is_finite() || cond > 1e14 {
        return Err(Error::IllConditioned { cond });
    }
    let inv = m.clone().try_inverse().ok_or(Error::IllConditioned { cond })?;
    Ok((&inv + inv.transpose()) * 0.5)
}
