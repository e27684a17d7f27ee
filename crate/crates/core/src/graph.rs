//! Graphs, Laplacians and source vectors.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral;

/// Undirected weighted graph with a dense symmetric weight matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    w: DMatrix<f64>,
}

impl Graph {
    /// Validates symmetry (1e-9 relative), zero diagonal, non-negativity and finiteness.
    /// The stored matrix is exactly symmetric.
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::dim(format!("weight matrix is {}x{}", w.nrows(), w.ncols())));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("weight matrix has non-finite entries"));
        }
        let asym = spectral::max_asymmetry(&w);
        if asym > spectral::SYMMETRY_TOL * w.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        let n = w.nrows();
        for i in 0..n {
            if w[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("self-loop weight {} at vertex {i}", w[(i, i)])));
            }
            for j in 0..n {
                if w[(i, j)] < 0.0 {
                    return Err(Error::invalid(format!("negative weight {} on ({i},{j})", w[(i, j)])));
                }
            }
        }
        let w = (&w + w.transpose()) * 0.5;
        Ok(Self { w })
    }

    pub fn empty(n: usize) -> Self {
        Self { w: DMatrix::zeros(n, n) }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for &(i, j, v) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i},{j}) out of range for n={n}")));
            }
            if i == j {
                return Err(Error::invalid(format!("self-loop at vertex {i}")));
            }
            if w[(i, j)] != 0.0 && w[(i, j)] != v {
                return Err(Error::invalid(format!("conflicting weights for edge ({i},{j})")));
            }
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
        Self::new(w)
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn into_weights(self) -> DMatrix<f64> {
        self.w
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.w[(i, j)]
    }

    pub fn degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.w.row_iter().map(|r| r.sum()))
    }

    /// Sum of all degrees, D in the commute-time relation.
    pub fn volume(&self) -> f64 {
        self.w.sum()
    }

    /// Upper-triangle edges (i < j) with positive weight.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let n = self.n();
        let mut out = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if self.w[(i, j)] > 0.0 {
                    out.push((i, j, self.w[(i, j)]));
                }
            }
        }
        out
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&j| self.w[(i, j)] > 0.0)
    }

    /// Connected-component label per vertex, labels numbered by smallest member.
    pub fn components(&self) -> Vec<usize> {
        let n = self.n();
        let mut label = vec![usize::MAX; n];
        let mut next = 0;
        for s in 0..n {
            if label[s] != usize::MAX {
                continue;
            }
            let mut stack = vec![s];
            label[s] = next;
            while let Some(u) = stack.pop() {
                for v in self.neighbors(u) {
                    if label[v] == usize::MAX {
                        label[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        label
    }

    pub fn is_connected(&self) -> bool {
        self.components().iter().all(|&c| c == 0)
    }

    /// Induced subgraph on `keep` (in the given order).
    pub fn induced(&self, keep: &[usize]) -> Graph {
        let k = keep.len();
        Graph { w: DMatrix::from_fn(k, k, |i, j| self.w[(keep[i], keep[j])]) }
    }
}

/// Directed graph; `w[(m, n)]` is the weight of the link m -> n.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectedGraph {
    w: DMatrix<f64>,
}

impl DirectedGraph {
    pub fn new(w: DMatrix<f64>) -> Result<Self> {
        if !w.is_square() {
            return Err(Error::dim(format!("weight matrix is {}x{}", w.nrows(), w.ncols())));
        }
        for i in 0..w.nrows() {
            if w[(i, i)] != 0.0 {
                return Err(Error::invalid(format!("self-loop at vertex {i}")));
            }
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("weights must be finite and non-negative"));
        }
        Ok(Self { w })
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut w = DMatrix::zeros(n, n);
        for &(i, j, v) in edges {
            if i >= n || j >= n {
                return Err(Error::invalid(format!("edge ({i},{j}) out of range for n={n}")));
            }
            w[(i, j)] = v;
        }
        Self::new(w)
    }

    pub fn n(&self) -> usize {
        self.w.nrows()
    }

    pub fn weights(&self) -> &DMatrix<f64> {
        &self.w
    }

    pub fn out_degrees(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.w.row_iter().map(|r| r.sum()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplacianKind {
    Combinatorial,
    Normalized,
    Generalized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Laplacian {
    l: DMatrix<f64>,
    kind: LaplacianKind,
}

const LAPLACIAN_TOL: f64 = 1e-9;

impl Laplacian {
    /// Validates a caller-supplied combinatorial Laplacian.
    pub fn combinatorial(l: DMatrix<f64>) -> Result<Self> {
        let l = symmetric_checked(l)?;
        let scale = l.amax().max(1.0);
        for (i, row) in l.row_iter().enumerate() {
            if row.sum().abs() > LAPLACIAN_TOL * scale {
                return Err(Error::invalid(format!("row {i} sums to {}", row.sum())));
            }
        }
        check_offdiag_nonpositive(&l, scale)?;
        Ok(Self { l, kind: LaplacianKind::Combinatorial })
    }

    /// Validates a generalized Laplacian Q = L + P: symmetric, PSD, off-diagonals <= 0, row sums >= 0.
    pub fn generalized(q: DMatrix<f64>) -> Result<Self> {
        let q = symmetric_checked(q)?;
        let scale = q.amax().max(1.0);
        check_offdiag_nonpositive(&q, scale)?;
        for (i, row) in q.row_iter().enumerate() {
            if row.sum() < -LAPLACIAN_TOL * scale {
                return Err(Error::invalid(format!("row {i} sums to {} < 0", row.sum())));
            }
        }
        let min_eig = spectral::eig_sym(&q)?.eigenvalues()[0];
        if min_eig < -LAPLACIAN_TOL * scale {
            return Err(Error::invalid(format!("not positive semidefinite (min eigenvalue {min_eig:e})")));
        }
        Ok(Self { l: q, kind: LaplacianKind::Generalized })
    }

    /// Wraps a matrix produced internally by an estimator; only symmetry is enforced.
    pub(crate) fn from_estimate(l: DMatrix<f64>, kind: LaplacianKind) -> Self {
        let l = (&l + l.transpose()) * 0.5;
        Self { l, kind }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.l
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.l
    }

    pub fn kind(&self) -> LaplacianKind {
        self.kind
    }

    pub fn n(&self) -> usize {
        self.l.nrows()
    }

    /// Weight matrix implied by the off-diagonal part, W = max(-L, 0) with a zero diagonal.
    pub fn to_weights(&self) -> DMatrix<f64> {
        let n = self.n();
        DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { (-self.l[(i, j)]).max(0.0) })
    }

    pub fn to_graph(&self) -> Graph {
        Graph { w: self.to_weights() }
    }
}

fn symmetric_checked(m: DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::dim(format!("matrix is {}x{}", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let asym = spectral::max_asymmetry(&m);
    if asym > spectral::SYMMETRY_TOL * m.amax().max(1.0) {
        return Err(Error::NotSymmetric(asym));
    }
    Ok((&m + m.transpose()) * 0.5)
}

fn check_offdiag_nonpositive(m: &DMatrix<f64>, scale: f64) -> Result<()> {
    let n = m.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && m[(i, j)] > LAPLACIAN_TOL * scale {
                return Err(Error::invalid(format!("positive off-diagonal {} at ({i},{j})", m[(i, j)])));
            }
        }
    }
    Ok(())
}

/// `Combinatorial` gives D - W. `Normalized` gives I - D^{-1/2} W D^{-1/2} and rejects isolated
/// vertices. `Generalized` returns D - W tagged as a generalized Laplacian with P = 0.
pub fn laplacian(g: &Graph, kind: LaplacianKind) -> Result<Laplacian> {
    match kind {
        LaplacianKind::Normalized => normalized_laplacian(g, true),
        _ => {
            let d = g.degrees();
            let l = DMatrix::from_diagonal(&d) - g.weights();
            Ok(Laplacian { l, kind })
        }
    }
}

/// Normalized Laplacian. With `strict` off, isolated vertices get an all-zero row and column.
pub fn normalized_laplacian(g: &Graph, strict: bool) -> Result<Laplacian> {
    let d = g.degrees();
    let n = g.n();
    if strict {
        if let Some(i) = d.iter().position(|&x| x <= 0.0) {
            return Err(Error::IsolatedVertex(i));
        }
    }
    let s: Vec<f64> = d.iter().map(|&x| if x > 0.0 { 1.0 / x.sqrt() } else { 0.0 }).collect();
    let l = DMatrix::from_fn(n, n, |i, j| {
        let off = -s[i] * g.weight(i, j) * s[j];
        if i == j && d[i] > 0.0 {
            1.0 + off
        } else {
            off
        }
    });
    Ok(Laplacian { l, kind: LaplacianKind::Normalized })
}

/// Quadratic form xᵀLx.
pub fn smoothness(l: &Laplacian, x: &DVector<f64>) -> Result<f64> {
    if x.len() != l.n() {
        return Err(Error::dim(format!("signal length {} for {} vertices", x.len(), l.n())));
    }
    Ok(x.dot(&(l.matrix() * x)))
}

/// External injections with zero total (Kirchhoff balance).
#[derive(Debug, Clone, PartialEq)]
pub struct SourceVector(DVector<f64>);

impl SourceVector {
    pub fn new(i: DVector<f64>) -> Result<Self> {
        let scale = i.amax().max(1.0);
        if i.sum().abs() > 1e-9 * scale {
            return Err(Error::invalid(format!("sources sum to {} instead of 0", i.sum())));
        }
        Ok(Self(i))
    }

    pub fn zeros(n: usize) -> Self {
        Self(DVector::zeros(n))
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn chain4() -> Graph {
        let s = 1.0 / 2f64.sqrt();
        Graph::from_edges(4, &[(0, 1, 0.5), (1, 2, 0.5), (2, 3, s)]).unwrap()
    }

    #[test]
    fn chain_laplacian_diagonal() {
        let l = laplacian(&chain4(), LaplacianKind::Combinatorial).unwrap();
        let expected = [0.5, 1.0, 0.5 + 1.0 / 2f64.sqrt(), 1.0 / 2f64.sqrt()];
        for (i, e) in expected.iter().enumerate() {
            assert!((l.matrix()[(i, i)] - e).abs() < 1e-12);
        }
        assert!((l.matrix()[(2, 2)] - 1.207).abs() < 1e-3);
        for row in l.matrix().row_iter() {
            assert!(row.sum().abs() < 1e-12);
        }
    }

    #[test]
    fn empty_graph_gives_zero_laplacian() {
        let l = laplacian(&Graph::empty(3), LaplacianKind::Combinatorial).unwrap();
        assert_eq!(l.matrix(), &DMatrix::zeros(3, 3));
    }

    #[test]
    fn normalized_rejects_isolated_vertex_when_strict() {
        let g = Graph::from_edges(3, &[(0, 1, 1.0)]).unwrap();
        assert!(matches!(laplacian(&g, LaplacianKind::Normalized), Err(Error::IsolatedVertex(2))));
        let l = normalized_laplacian(&g, false).unwrap();
        assert_eq!(l.matrix()[(2, 2)], 0.0);
        assert_eq!(l.matrix()[(0, 0)], 1.0);
    }

    #[test]
    fn graph_validation() {
        let mut w = DMatrix::zeros(2, 2);
        w[(0, 1)] = 1.0;
        assert!(matches!(Graph::new(w.clone()), Err(Error::NotSymmetric(_))));
        w[(1, 0)] = 1.0;
        w[(0, 0)] = 0.1;
        assert!(Graph::new(w).is_err());
        assert!(Graph::from_edges(2, &[(0, 1, -1.0)]).is_err());
        assert!(Graph::from_edges(2, &[(0, 2, 1.0)]).is_err());
    }

    #[test]
    fn constant_vector_is_smooth() {
        let l = laplacian(&chain4(), LaplacianKind::Combinatorial).unwrap();
        let x = DVector::from_element(4, 3.0);
        assert!(smoothness(&l, &x).unwrap().abs() < 1e-12);
    }

    #[test]
    fn source_vector_balance() {
        assert!(SourceVector::new(DVector::from_vec(vec![1.0, -1.0])).is_ok());
        assert!(SourceVector::new(DVector::from_vec(vec![1.0, 0.0])).is_err());
    }

    #[test]
    fn generalized_validation() {
        let q = DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 1.5]);
        assert!(Laplacian::generalized(q).is_ok());
        let bad = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(Laplacian::generalized(bad).is_err());
    }

    #[test]
    fn components_and_connectivity() {
        let g = Graph::from_edges(5, &[(0, 1, 1.0), (3, 4, 1.0)]).unwrap();
        assert_eq!(g.components(), vec![0, 0, 1, 2, 2]);
        assert!(!g.is_connected());
        assert!(chain4().is_connected());
    }
}
