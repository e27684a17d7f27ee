//! Lattice graphs as Kronecker sums of paths, their separable Fourier basis, and lattice sampling.
//!
//! Vertex (i_1, ..., i_M) has linear index i_1 + I_1 (i_2 + I_2 (i_3 + ...)), so the first
//! coordinate varies fastest.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::samples::path_graph;
use crate::spectral::{eig_sym, singular_triplets, SpectralDecomp};

/// Largest lattice accepted by the dense constructors.
pub const MAX_LATTICE_VERTICES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    dims: Vec<usize>,
}

impl Lattice {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::invalid("lattice needs at least one dimension"));
        }
        if let Some(pos) = dims.iter().position(|&d| d == 0) {
            return Err(Error::invalid(format!("extent {pos} is zero")));
        }
        dims.iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .ok_or_else(|| Error::SizeGuard(format!("lattice {dims:?} overflows the index range")))?;
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn order(&self) -> usize {
        self.dims.len()
    }

    pub fn n(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn linear_index(&self, coords: &[usize]) -> Result<usize> {
        if coords.len() != self.dims.len() {
            return Err(Error::dim(format!("{} coordinates for an order-{} lattice", coords.len(), self.order())));
        }
        let mut k = 0;
        for (m, (&c, &d)) in coords.iter().zip(&self.dims).enumerate().rev() {
            if c >= d {
                return Err(Error::invalid(format!("coordinate {m} is {c}, extent {d}")));
            }
            k = k * d + c;
        }
        Ok(k)
    }

    pub fn coords(&self, mut k: usize) -> Vec<usize> {
        self.dims
            .iter()
            .map(|&d| {
                let c = k % d;
                k /= d;
                c
            })
            .collect()
    }

    fn guard(&self) -> Result<()> {
        if self.n() > MAX_LATTICE_VERTICES {
            return Err(Error::SizeGuard(format!("{} vertices exceeds {MAX_LATTICE_VERTICES}", self.n())));
        }
        Ok(())
    }
}

/// Strictly increasing linear indices of the kept vertices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SamplingMap {
    kept: Vec<usize>,
}

impl SamplingMap {
    pub fn new(kept: Vec<usize>, n: usize) -> Result<Self> {
        if let Some(w) = kept.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::invalid(format!("sampling indices not strictly increasing at {} -> {}", w[0], w[1])));
        }
        if let Some(&bad) = kept.iter().find(|&&k| k >= n) {
            return Err(Error::invalid(format!("sampling index {bad} out of range for n={n}")));
        }
        Ok(Self { kept })
    }

    pub fn kept(&self) -> &[usize] {
        &self.kept
    }

    pub fn len(&self) -> usize {
        self.kept.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kept.is_empty()
    }

    /// K×N selection matrix Π.
    pub fn matrix(&self, n: usize) -> DMatrix<f64> {
        let mut p = DMatrix::zeros(self.kept.len(), n);
        for (r, &c) in self.kept.iter().enumerate() {
            p[(r, c)] = 1.0;
        }
        p
    }
}

/// Unweighted path on `i` vertices (tridiagonal 0/1 adjacency).
pub fn path_adjacency(i: usize) -> Graph {
    path_graph(i)
}

/// Kronecker sum of path adjacencies, A = A_M ⊕ ... ⊕ A_1.
pub fn kron_sum_adjacency(lat: &Lattice) -> Result<Graph> {
    lat.guard()?;
    let n = lat.n();
    let mut w = DMatrix::zeros(n, n);
    let mut stride = 1;
    for &d in lat.dims() {
        for k in 0..n {
            let c = (k / stride) % d;
            if c + 1 < d {
                w[(k, k + stride)] = 1.0;
                w[(k + stride, k)] = 1.0;
            }
        }
        stride *= d;
    }
    Graph::new(w)
}

/// Eigenbasis U = U_M ⊗ ... ⊗ U_1 with eigenvalues Λ_M ⊕ ... ⊕ Λ_1, sorted ascending.
pub fn separable_gdft(lat: &Lattice) -> Result<SpectralDecomp> {
    lat.guard()?;
    let axes: Vec<SpectralDecomp> =
        lat.dims().par_iter().map(|&d| eig_sym(path_adjacency(d).weights())).collect::<Result<_>>()?;
    let n = lat.n();
    let mut values = DVector::zeros(n);
    let mut vectors = DMatrix::zeros(n, n);
    for col in 0..n {
        let ks = lat.coords(col);
        values[col] = ks.iter().zip(&axes).map(|(&k, ax)| ax.eigenvalues()[k]).sum();
        for row in 0..n {
            let is = lat.coords(row);
            vectors[(row, col)] =
                is.iter().zip(&ks).zip(&axes).map(|((&i, &k), ax)| ax.eigenvectors()[(i, k)]).product();
        }
    }
    SpectralDecomp::from_parts(values, vectors)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Separability {
    pub is_rank1: bool,
    /// The input was the zero vector.
    pub degenerate: bool,
    /// σ₂/σ₁ of the I_1×I_2 reshaping (0 when there is one singular value).
    pub ratio: f64,
    /// (x_1, x_2) with x ≈ x_2 ⊗ x_1, scaled by √σ₁ each; the largest entry of x_1 is positive.
    pub factors: Option<(DVector<f64>, DVector<f64>)>,
}

/// Rank-1 test of a signal on a two-dimensional lattice.
pub fn separability_check(x: &DVector<f64>, lat: &Lattice) -> Result<Separability> {
    if lat.order() != 2 {
        return Err(Error::invalid(format!("separability check needs a 2-D lattice, got order {}", lat.order())));
    }
    if x.len() != lat.n() {
        return Err(Error::dim(format!("signal length {} for {} vertices", x.len(), lat.n())));
    }
    let (i1, i2) = (lat.dims()[0], lat.dims()[1]);
    if x.iter().all(|&v| v == 0.0) {
        return Ok(Separability { is_rank1: false, degenerate: true, ratio: f64::NAN, factors: None });
    }
    let m = DMatrix::from_column_slice(i1, i2, x.as_slice());
    let triplets = singular_triplets(&m);
    let s1 = triplets[0].sigma;
    let ratio = triplets.get(1).map_or(0.0, |t| t.sigma / s1);
    let (u, v) = (triplets[0].u.clone(), triplets[0].v.clone());
    let sign = if u[u.iamax()] < 0.0 { -1.0 } else { 1.0 };
    let root = s1.sqrt();
    let factors = (u * (sign * root), v * (sign * root));
    Ok(Separability { is_rank1: ratio < 1e-8, degenerate: false, ratio, factors: Some(factors) })
}

/// Π A Πᵀ: the graph induced on the kept vertices.
pub fn subsample(g: &Graph, map: &SamplingMap) -> Result<Graph> {
    if let Some(&bad) = map.kept().iter().find(|&&k| k >= g.n()) {
        return Err(Error::invalid(format!("sampling index {bad} out of range for n={}", g.n())));
    }
    Ok(g.induced(map.kept()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn small_paths() {
        assert_eq!(path_adjacency(1).weights(), &DMatrix::zeros(1, 1));
        let p = path_adjacency(3);
        assert_eq!(p.edges(), vec![(0, 1, 1.0), (1, 2, 1.0)]);
    }

    #[test]
    fn path_spectrum_closed_form() {
        let ev = eig_sym(path_adjacency(5).weights()).unwrap();
        let mut expected: Vec<f64> = (1..=5).map(|k| 2.0 * (k as f64 * PI / 6.0).cos()).collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in ev.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn two_by_two_grid_is_a_cycle() {
        let g = kron_sum_adjacency(&Lattice::new(vec![2, 2]).unwrap()).unwrap();
        let mut edges: Vec<_> = g.edges().into_iter().map(|(i, j, _)| (i, j)).collect();
        edges.sort();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 3), (2, 3)]);
        assert!(g.degrees().iter().all(|&d| d == 2.0));
    }

    #[test]
    fn three_path_product() {
        let g = kron_sum_adjacency(&Lattice::new(vec![2, 3, 2]).unwrap()).unwrap();
        assert_eq!(g.n(), 12);
        assert_eq!(g.edges().len(), 20);
    }

    #[test]
    fn index_round_trip() {
        let lat = Lattice::new(vec![3, 4, 2]).unwrap();
        for k in 0..lat.n() {
            assert_eq!(lat.linear_index(&lat.coords(k)).unwrap(), k);
        }
        assert_eq!(lat.linear_index(&[1, 0, 0]).unwrap(), 1);
        assert_eq!(lat.linear_index(&[0, 1, 0]).unwrap(), 3);
        assert!(lat.linear_index(&[3, 0, 0]).is_err());
    }

    #[test]
    fn gdft_matches_single_path() {
        let lat = Lattice::new(vec![2]).unwrap();
        let a = separable_gdft(&lat).unwrap();
        let b = eig_sym(path_adjacency(2).weights()).unwrap();
        assert!((a.eigenvalues() - b.eigenvalues()).amax() < 1e-15);
        assert!((a.eigenvectors() - b.eigenvectors()).amax() < 1e-12);
    }

    #[test]
    fn gdft_reconstructs_grid() {
        let lat = Lattice::new(vec![3, 4]).unwrap();
        let dec = separable_gdft(&lat).unwrap();
        let u = dec.eigenvectors();
        assert!((u.transpose() * u - DMatrix::identity(12, 12)).amax() < 1e-10);
        let a = kron_sum_adjacency(&lat).unwrap();
        assert!((dec.reconstruct() - a.weights()).amax() < 1e-9);
    }

    #[test]
    fn size_guard() {
        let lat = Lattice::new(vec![400, 400]).unwrap();
        assert!(matches!(kron_sum_adjacency(&lat), Err(Error::SizeGuard(_))));
        assert!(Lattice::new(vec![3, 0]).is_err());
        assert!(Lattice::new(vec![usize::MAX, 2]).is_err());
    }

    #[test]
    fn separable_signal() {
        let lat = Lattice::new(vec![3, 4]).unwrap();
        let a = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let b = DVector::from_vec(vec![0.3, 1.0, 2.0, -1.0]);
        let x = DVector::from_fn(12, |k, _| a[k % 3] * b[k / 3]);
        let s = separability_check(&x, &lat).unwrap();
        assert!(s.is_rank1);
        let (fa, fb) = s.factors.unwrap();
        let rebuilt = DVector::from_fn(12, |k, _| fa[k % 3] * fb[k / 3]);
        assert!((rebuilt - &x).amax() < 1e-12);
        let scale = fa[0] / a[0];
        assert!((fa - &a * scale).amax() < 1e-12);

        let c = DVector::from_vec(vec![0.0, 1.0, 1.0]);
        let d = DVector::from_vec(vec![1.0, 0.0, 0.0, 3.0]);
        let y = x + DVector::from_fn(12, |k, _| c[k % 3] * d[k / 3]);
        assert!(!separability_check(&y, &lat).unwrap().is_rank1);

        assert!(separability_check(&DVector::from_element(12, 2.0), &lat).unwrap().is_rank1);
        let zero = separability_check(&DVector::zeros(12), &lat).unwrap();
        assert!(zero.degenerate && !zero.is_rank1);
    }

    #[test]
    fn subsample_cases() {
        let lat = Lattice::new(vec![3, 3]).unwrap();
        let g = kron_sum_adjacency(&lat).unwrap();
        let all = SamplingMap::new((0..9).collect(), 9).unwrap();
        assert_eq!(subsample(&g, &all).unwrap(), g);
        let one = subsample(&g, &SamplingMap::new(vec![0], 9).unwrap()).unwrap();
        assert_eq!(one.weights(), &DMatrix::zeros(1, 1));
        let map = SamplingMap::new(vec![1, 4, 5, 8], 9).unwrap();
        let s = subsample(&g, &map).unwrap();
        let pi = map.matrix(9);
        assert_eq!(s.weights(), &(&pi * g.weights() * pi.transpose()));
        assert!(SamplingMap::new(vec![2, 2], 9).is_err());
        assert!(SamplingMap::new(vec![9], 9).is_err());
    }
}
