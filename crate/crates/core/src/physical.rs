//! Circuits, random walks, PageRank, label propagation and sparse-source denoising.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian, DirectedGraph, Graph, Laplacian, LaplacianKind, SourceVector};
use crate::spectral;

/// Pinned vertex values (potentials, probabilities or labels).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCondition {
    fixed: BTreeMap<usize, f64>,
}

impl BoundaryCondition {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut bc = Self::new();
        for (v, x) in pairs {
            bc.pin(v, x)?;
        }
        Ok(bc)
    }

    pub fn pin(&mut self, vertex: usize, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::invalid(format!("non-finite value pinned at vertex {vertex}")));
        }
        if let Some(old) = self.fixed.insert(vertex, value) {
            if old != value {
                return Err(Error::invalid(format!("vertex {vertex} pinned twice ({old} and {value})")));
            }
        }
        Ok(())
    }

    pub fn get(&self, vertex: usize) -> Option<f64> {
        self.fixed.get(&vertex).copied()
    }

    pub fn is_fixed(&self, vertex: usize) -> bool {
        self.fixed.contains_key(&vertex)
    }

    pub fn len(&self) -> usize {
        self.fixed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fixed.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.fixed.iter().map(|(&v, &x)| (v, x))
    }

    pub fn min_value(&self) -> Option<f64> {
        self.fixed.values().copied().reduce(f64::min)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.fixed.values().copied().reduce(f64::max)
    }

    fn check_range(&self, n: usize) -> Result<()> {
        match self.fixed.keys().find(|&&v| v >= n) {
            Some(v) => Err(Error::invalid(format!("pinned vertex {v} out of range for n={n}"))),
            None => Ok(()),
        }
    }

    fn split(&self, n: usize) -> (Vec<usize>, Vec<usize>) {
        (0..n).partition(|v| !self.is_fixed(*v))
    }
}

/// Free-vertex potentials from (L x)_n = i_n with the pinned values moved to the right-hand side.
pub fn circuit_solve(l: &Laplacian, bc: &BoundaryCondition, sources: Option<&SourceVector>) -> Result<DVector<f64>> {
    let n = l.n();
    bc.check_range(n)?;
    if let Some(s) = sources {
        if s.len() != n {
            return Err(Error::dim(format!("{} sources for {n} vertices", s.len())));
        }
    }
    let lm = l.matrix();
    let (free, fixed) = bc.split(n);
    let mut x = DVector::zeros(n);
    for (v, val) in bc.iter() {
        x[v] = val;
    }
    if free.is_empty() {
        return Ok(x);
    }
    let k = free.len();
    let l_ff = DMatrix::from_fn(k, k, |a, b| lm[(free[a], free[b])]);
    let rhs = DVector::from_fn(k, |a, _| {
        let inj = sources.map_or(0.0, |s| s.as_vector()[free[a]]);
        inj - fixed.iter().map(|&f| lm[(free[a], f)] * x[f]).sum::<f64>()
    });
    let sol = solve_spd(l_ff, &rhs).ok_or_else(|| {
        Error::Singular("a component of free vertices has no pinned vertex (floating potential)".into())
    })?;
    for (a, &v) in free.iter().enumerate() {
        x[v] = sol[a];
    }
    Ok(x)
}

/// Cholesky solve with a relative pivot floor so that floating components are reported.
fn solve_spd(m: DMatrix<f64>, rhs: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = m.diagonal().amax();
    if scale <= 0.0 {
        return None;
    }
    let chol = m.cholesky()?;
    let floor = 1e-12 * scale;
    if chol.l_dirty().diagonal().iter().any(|&p| p * p < floor) {
        return None;
    }
    Some(chol.solve(rhs))
}

/// Teleport and scale constants of the damped iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Damping {
    pub teleport: f64,
    pub scale: f64,
}

impl Default for Damping {
    fn default() -> Self {
        Self { teleport: 0.15, scale: 0.85 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PageRank {
    pub rank: DVector<f64>,
    /// Number of updates applied to x₀ = 𝟙.
    pub iterations: usize,
    pub converged: bool,
}

/// Wᵀ with each column divided by the out-degree of its source page.
pub fn link_matrix(g: &DirectedGraph) -> Result<DMatrix<f64>> {
    let out = g.out_degrees();
    if let Some(v) = out.iter().position(|&d| d <= 0.0) {
        return Err(Error::DanglingVertex(v));
    }
    let w = g.weights();
    let n = g.n();
    Ok(DMatrix::from_fn(n, n, |i, j| w[(j, i)] / out[j]))
}

/// Power iteration x ← W_N x (or teleport + scale·W_N x) from the all-ones vector, stopping when the
/// max-norm update falls below `tol`.
pub fn pagerank(g: &DirectedGraph, damping: Option<Damping>, tol: f64, max_iter: usize) -> Result<PageRank> {
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("tolerance must be > 0, got {tol}")));
    }
    let wn = link_matrix(g)?;
    let n = g.n();
    let mut x = DVector::from_element(n, 1.0);
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut next = &wn * &x;
        if let Some(d) = damping {
            next = next.map(|v| d.teleport + d.scale * v);
        }
        iterations += 1;
        let change = (&next - &x).amax();
        x = next;
        if change < tol {
            converged = true;
            break;
        }
    }
    if damping.is_none() && n > 0 {
        let mean = x.mean();
        if mean != 0.0 {
            x /= mean;
        }
    }
    Ok(PageRank { rank: x, iterations, converged })
}

/// Probability of reaching a value-1 vertex before a value-0 vertex (fluid model).
pub fn absorbing_probabilities(g: &Graph, bc: &BoundaryCondition) -> Result<DVector<f64>> {
    circuit_solve(&laplacian(g, LaplacianKind::Combinatorial)?, bc, None)
}

fn require_connected(g: &Graph) -> Result<()> {
    if g.is_connected() {
        Ok(())
    } else {
        let labels = g.components();
        let count = labels.iter().max().map_or(0, |m| m + 1);
        Err(Error::Disconnected(format!("{count} components; expected times are infinite")))
    }
}

/// Expected number of steps of a random walk to first reach `target`, from every vertex.
pub fn hitting_times(g: &Graph, target: usize) -> Result<DVector<f64>> {
    let n = g.n();
    if target >= n {
        return Err(Error::invalid(format!("target {target} out of range for n={n}")));
    }
    require_connected(g)?;
    if n == 1 {
        return Ok(DVector::zeros(1));
    }
    let l = laplacian(g, LaplacianKind::Combinatorial)?;
    let keep: Vec<usize> = (0..n).filter(|&v| v != target).collect();
    let d = g.degrees();
    let lm = DMatrix::from_fn(keep.len(), keep.len(), |a, b| l.matrix()[(keep[a], keep[b])]);
    let rhs = DVector::from_fn(keep.len(), |a, _| d[keep[a]]);
    let sol = solve_spd(lm, &rhs).ok_or_else(|| Error::Singular("reduced Laplacian is singular".into()))?;
    let mut h = DVector::zeros(n);
    for (a, &v) in keep.iter().enumerate() {
        h[v] = sol[a];
    }
    Ok(h)
}

/// Pseudo-inverse of the combinatorial Laplacian, from which all resistances follow.
#[derive(Debug, Clone)]
pub struct ResistanceMetric {
    lpinv: DMatrix<f64>,
    volume: f64,
}

impl ResistanceMetric {
    pub fn new(g: &Graph) -> Result<Self> {
        require_connected(g)?;
        let l = laplacian(g, LaplacianKind::Combinatorial)?;
        Ok(Self { lpinv: spectral::pseudo_inverse(l.matrix(), 1e-12), volume: g.volume() })
    }

    pub fn resistance(&self, m: usize, n: usize) -> f64 {
        if m == n {
            return 0.0;
        }
        let p = &self.lpinv;
        (p[(m, m)] + p[(n, n)] - p[(m, n)] - p[(n, m)]).max(0.0)
    }

    pub fn commute_time(&self, m: usize, n: usize) -> f64 {
        self.volume * self.resistance(m, n)
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }
}

fn check_pair(g: &Graph, m: usize, n: usize) -> Result<()> {
    if m >= g.n() || n >= g.n() {
        return Err(Error::invalid(format!("vertex pair ({m},{n}) out of range for n={}", g.n())));
    }
    Ok(())
}

/// (e_m − e_n)ᵀ L⁺ (e_m − e_n).
pub fn effective_resistance(g: &Graph, m: usize, n: usize) -> Result<f64> {
    check_pair(g, m, n)?;
    Ok(ResistanceMetric::new(g)?.resistance(m, n))
}

/// Total degree times the effective resistance.
pub fn commute_time(g: &Graph, m: usize, n: usize) -> Result<f64> {
    check_pair(g, m, n)?;
    Ok(ResistanceMetric::new(g)?.commute_time(m, n))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Propagation {
    pub scores: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn check_labels_cover_components(g: &Graph, labels: &BoundaryCondition) -> Result<()> {
    let comp = g.components();
    let count = comp.iter().max().map_or(0, |m| m + 1);
    let mut seen = vec![false; count];
    for (v, _) in labels.iter() {
        seen[comp[v]] = true;
    }
    match seen.iter().position(|s| !s) {
        Some(c) => {
            let v = comp.iter().position(|&x| x == c).unwrap_or(0);
            Err(Error::invalid(format!("component containing vertex {v} has no labeled vertex")))
        }
        None => Ok(()),
    }
}

/// Iterates x ← D⁻¹W x, re-pinning the labeled entries after every step. Unlabeled vertices start at
/// the mean label, so every iterate stays within the label range.
pub fn label_propagation(g: &Graph, labels: &BoundaryCondition, max_iter: usize, tol: f64) -> Result<Propagation> {
    let n = g.n();
    labels.check_range(n)?;
    if labels.is_empty() && n > 0 {
        return Err(Error::invalid("label propagation needs at least one labeled vertex"));
    }
    check_labels_cover_components(g, labels)?;
    let mut x = DVector::from_element(n, 0.0);
    let mean = labels.iter().map(|(_, v)| v).sum::<f64>() / labels.len().max(1) as f64;
    for v in 0..n {
        x[v] = labels.get(v).unwrap_or(mean);
    }
    if labels.len() == n {
        return Ok(Propagation { scores: x, iterations: 0, converged: true });
    }
    let d = g.degrees();
    let s = DMatrix::from_fn(n, n, |i, j| if d[i] > 0.0 { g.weight(i, j) / d[i] } else { 0.0 });
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iter {
        let mut next = &s * &x;
        for (v, val) in labels.iter() {
            next[v] = val;
        }
        iterations += 1;
        let change = (&next - &x).amax();
        x = next;
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(Propagation { scores: x, iterations, converged })
}

/// Fixed point of [`label_propagation`] by a direct solve: x_U = (I − S_UU)⁻¹ S_UL x_L.
pub fn harmonic_labels(g: &Graph, labels: &BoundaryCondition) -> Result<DVector<f64>> {
    labels.check_range(g.n())?;
    check_labels_cover_components(g, labels)?;
    absorbing_probabilities(g, labels)
}

/// Denoises `y` assuming it is driven by `k` point sources, with `reference` grounded at 0.
pub fn sparse_source_denoise(l: &Laplacian, y: &DVector<f64>, k: usize, reference: usize) -> Result<DVector<f64>> {
    let n = l.n();
    if y.len() != n {
        return Err(Error::dim(format!("signal length {} for {n} vertices", y.len())));
    }
    if reference >= n {
        return Err(Error::invalid(format!("reference vertex {reference} out of range for n={n}")));
    }
    if k == 0 || k >= n {
        return Err(Error::invalid(format!("source count must be in 1..{n}, got {k}")));
    }
    let y0 = y.map(|v| v - y[reference]);
    let keep: Vec<usize> = (0..n).filter(|&v| v != reference).collect();
    let m = keep.len();
    let lr = DMatrix::from_fn(m, m, |a, b| l.matrix()[(keep[a], keep[b])]);
    let yr = DVector::from_fn(m, |a, _| y0[keep[a]]);
    let lr_inv = lr
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Singular("reduced Laplacian is not invertible".into()))?;

    let initial = &lr * &yr;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| initial[b].abs().total_cmp(&initial[a].abs()).then(a.cmp(&b)));
    let support = &order[..k];
    let lk = DMatrix::from_fn(m, k, |a, c| lr_inv[(a, support[c])]);
    let jk = spectral::pseudo_inverse(&lk, 1e-12) * &yr;
    let mut j = DVector::zeros(m);
    for (c, &pos) in support.iter().enumerate() {
        j[pos] = jk[c];
    }
    let xr = &lr_inv * j;
    let mut x = DVector::zeros(n);
    for (a, &v) in keep.iter().enumerate() {
        x[v] = xr[a];
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WalkKind {
    /// p_nm = W_nm / d_n
    VertexCentric,
    /// x_{p+1}(m) = Σ_n x_p(n) W_nm / d_m
    EdgeCentric,
}

impl std::str::FromStr for WalkKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vertex_centric" | "vertex" => Ok(Self::VertexCentric),
            "edge_centric" | "edge" => Ok(Self::EdgeCentric),
            other => Err(Error::invalid(format!("unknown walk kind {other:?}"))),
        }
    }
}

/// Steady state x = D^{1/2}𝟙/√N (vertex-centric) or 𝟙/√N (edge-centric).
///
/// The vertex-centric vector is the one obtained by taking 𝟙/√N as the null vector of the
/// normalized Laplacian. The fixed point of x ← W D⁻¹ x itself is [`stationary_distribution`].
pub fn walk_steady_state(g: &Graph, kind: WalkKind) -> Result<DVector<f64>> {
    require_connected(g)?;
    let n = g.n() as f64;
    Ok(match kind {
        WalkKind::VertexCentric => g.degrees().map(|d| (d / n).sqrt()),
        WalkKind::EdgeCentric => DVector::from_element(g.n(), 1.0 / n.sqrt()),
    })
}

/// d_n / Σ d, the fixed point of x ← W D⁻¹ x with unit sum.
pub fn stationary_distribution(g: &Graph) -> Result<DVector<f64>> {
    require_connected(g)?;
    Ok(g.degrees() / g.volume())
}
