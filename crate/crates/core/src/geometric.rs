//! Weight matrices from vertex geometry or from signal similarity.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::learning::ObservationMatrix;

/// Vertex positions, one row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexCloud {
    coords: DMatrix<f64>,
}

impl VertexCloud {
    pub fn new(coords: DMatrix<f64>) -> Result<Self> {
        if coords.ncols() == 0 {
            return Err(Error::invalid("vertex coordinates need at least one dimension"));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("vertex coordinates must be finite"));
        }
        Ok(Self { coords })
    }

    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    pub fn n(&self) -> usize {
        self.coords.nrows()
    }

    pub fn dim(&self) -> usize {
        self.coords.ncols()
    }

    pub fn distance(&self, m: usize, n: usize) -> f64 {
        (self.coords.row(m) - self.coords.row(n)).norm()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// exp(−r²/τ²)
    GaussSq,
    /// exp(−r/τ)
    ExpLin,
    /// 1/r
    InvDist,
    /// 1
    Binary,
}

impl std::str::FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss_sq" | "gauss" => Ok(Self::GaussSq),
            "exp_lin" | "exp" => Ok(Self::ExpLin),
            "inv_dist" => Ok(Self::InvDist),
            "binary" => Ok(Self::Binary),
            other => Err(Error::invalid(format!("unknown kernel {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub tau: f64,
    /// Cutoff distance; weights are zero above it.
    pub kappa: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, tau: f64, kappa: f64) -> Result<Self> {
        if !(tau > 0.0) {
            return Err(Error::invalid(format!("tau must be > 0, got {tau}")));
        }
        if !(kappa > 0.0) {
            return Err(Error::invalid(format!("kappa must be > 0, got {kappa}")));
        }
        Ok(Self { kind, tau, kappa })
    }

    /// Weight for distance `r`; zero above the cutoff.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if r > self.kappa {
            return Ok(0.0);
        }
        Ok(match self.kind {
            KernelKind::GaussSq => (-(r * r) / (self.tau * self.tau)).exp(),
            KernelKind::ExpLin => (-r / self.tau).exp(),
            KernelKind::InvDist => {
                if r == 0.0 {
                    return Err(Error::Singular("inverse-distance kernel at zero distance".into()));
                }
                1.0 / r
            }
            KernelKind::Binary => 1.0,
        })
    }
}

fn weights_from_distances(dist: &DMatrix<f64>, kernel: &KernelSpec) -> Result<Graph> {
    let n = dist.nrows();
    let mut w = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in m + 1..n {
            let v = kernel.eval(dist[(m, k)]).map_err(|e| match e {
                Error::Singular(_) => Error::Singular(format!("vertices {m} and {k} coincide")),
                other => other,
            })?;
            w[(m, k)] = v;
            w[(k, m)] = v;
        }
    }
    Graph::new(w)
}

/// W_mn = kernel(‖r_m − r_n‖) for m ≠ n within the cutoff.
pub fn geometric_weights(cloud: &VertexCloud, kernel: &KernelSpec) -> Result<Graph> {
    let n = cloud.n();
    let dist = DMatrix::from_fn(n, n, |m, k| cloud.distance(m, k));
    weights_from_distances(&dist, kernel)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimilarityNormalization {
    /// Σ_m Σ_n r²_mn = 1 over the whole matrix.
    #[default]
    Global,
    /// Each pair divided by √(Σ_p x_p²(m) Σ_p x_p²(n)); equals 2(1 − R_x(m,n)) for unit-variance data.
    PairEnergy,
}

/// Squared similarity distances r²_mn from P snapshots per vertex.
/// The flag is set when every pairwise difference vanishes (or a vertex has no energy under
/// `PairEnergy`), in which case the returned matrix is all zeros.
pub fn similarity_distances(x: &ObservationMatrix, norm: SimilarityNormalization) -> (DMatrix<f64>, bool) {
    let data = x.data();
    let n = data.nrows();
    let mut raw = DMatrix::zeros(n, n);
    for m in 0..n {
        for k in m + 1..n {
            let d = (data.row(m) - data.row(k)).norm_squared();
            raw[(m, k)] = d;
            raw[(k, m)] = d;
        }
    }
    match norm {
        SimilarityNormalization::Global => {
            let total = raw.sum();
            if total == 0.0 {
                (raw, true)
            } else {
                (raw / total, false)
            }
        }
        SimilarityNormalization::PairEnergy => {
            let energy: Vec<f64> = data.row_iter().map(|r| r.norm_squared()).collect();
            if energy.iter().any(|&e| e == 0.0) {
                return (DMatrix::zeros(n, n), true);
            }
            let scaled = DMatrix::from_fn(n, n, |m, k| raw[(m, k)] / (energy[m] * energy[k]).sqrt());
            (scaled, raw.sum() == 0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    pub graph: Graph,
    /// All observations identical: the graph is complete with unit weights.
    pub degenerate: bool,
}

/// Kernel weights over the globally normalized similarity distance.
pub fn similarity_weights(x: &ObservationMatrix, kernel: &KernelSpec) -> Result<SimilarityGraph> {
    similarity_weights_with(x, kernel, SimilarityNormalization::Global)
}

pub fn similarity_weights_with(
    x: &ObservationMatrix,
    kernel: &KernelSpec,
    norm: SimilarityNormalization,
) -> Result<SimilarityGraph> {
    let n = x.n();
    let (r2, degenerate) = similarity_distances(x, norm);
    if degenerate {
        let w = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
        return Ok(SimilarityGraph { graph: Graph::new(w)?, degenerate: true });
    }
    let dist = r2.map(f64::sqrt);
    Ok(SimilarityGraph { graph: weights_from_distances(&dist, kernel)?, degenerate: false })
}

/// (a − b)ᵀ H (a − b).
pub fn generalized_distance(a: &DVector<f64>, b: &DVector<f64>, h: &DMatrix<f64>) -> Result<f64> {
    if a.len() != b.len() || h.nrows() != a.len() || h.ncols() != a.len() {
        return Err(Error::dim(format!(
            "vectors of length {} and {} with a {}x{} inner-product matrix",
            a.len(),
            b.len(),
            h.nrows(),
            h.ncols()
        )));
    }
    let d = a - b;
    let v = d.dot(&(h * &d));
    let scale = h.amax() * d.norm_squared();
    if v < -1e-12 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::invalid(format!("inner-product matrix is not PSD (quadratic form {v:e})")));
    }
    Ok(v.max(0.0))
}

fn swiss_primitive(v: f64) -> f64 {
    0.5 * v * (v * v + 1.0).sqrt() + 0.5 * v.asinh()
}

/// Arc length along the roll between parameters `v_m` and `v_n`.
pub fn swiss_arclength(v_m: f64, v_n: f64) -> f64 {
    (swiss_primitive(v_n) - swiss_primitive(v_m)).abs() / (4.0 * PI)
}

/// Swiss-roll point for parameters (u, v).
pub fn swiss_point(u: f64, v: f64) -> [f64; 3] {
    [v * v.cos() / (4.0 * PI), u, v * v.sin() / (4.0 * PI)]
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwissRoll {
    pub graph: Graph,
    pub cloud: VertexCloud,
    /// Surface parameters (u, v) per vertex.
    pub params: Vec<(f64, f64)>,
}

/// `n` vertices uniform in u ∈ [−1, 1], v ∈ [π, 4π], weighted by geodesic distance.
pub fn swiss_roll_graph(n: usize, seed: u64, kernel: &KernelSpec) -> Result<SwissRoll> {
    if n < 2 {
        return Err(Error::invalid(format!("swiss roll needs n >= 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            let u = rng.random_range(-1.0..=1.0);
            let v = rng.random_range(PI..=4.0 * PI);
            (u, v)
        })
        .collect();
    let coords = DMatrix::from_fn(n, 3, |i, c| swiss_point(params[i].0, params[i].1)[c]);
    let dist = DMatrix::from_fn(n, n, |m, k| {
        let l = swiss_arclength(params[m].1, params[k].1);
        let dy = params[m].0 - params[k].0;
        (l * l + dy * dy).sqrt()
    });
    let graph = weights_from_distances(&dist, kernel)?;
    Ok(SwissRoll { graph, cloud: VertexCloud::new(coords)?, params })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_distr::{Distribution, StandardNormal};

    fn gauss(tau: f64, kappa: f64) -> KernelSpec {
        KernelSpec::new(KernelKind::GaussSq, tau, kappa).unwrap()
    }

    #[test]
    fn kernel_at_tau() {
        let cloud = VertexCloud::new(DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.3, 0.4])).unwrap();
        let g = geometric_weights(&cloud, &gauss(0.5, 1.0)).unwrap();
        assert!((g.weight(0, 1) - (-1f64).exp()).abs() < 1e-15);
        let g = geometric_weights(&cloud, &gauss(0.5, 0.4)).unwrap();
        assert_eq!(g.weight(0, 1), 0.0);
    }

    #[test]
    fn binary_matches_brute_force_radius() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts = DMatrix::from_fn(10, 2, |_, _| rng.random_range(0.0..1.0));
        let cloud = VertexCloud::new(pts.clone()).unwrap();
        let k = KernelSpec::new(KernelKind::Binary, 1.0, 0.35).unwrap();
        let g = geometric_weights(&cloud, &k).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                let dx = pts[(i, 0)] - pts[(j, 0)];
                let dy = pts[(i, 1)] - pts[(j, 1)];
                let expected = if i != j && (dx * dx + dy * dy).sqrt() <= 0.35 { 1.0 } else { 0.0 };
                assert_eq!(g.weight(i, j), expected);
            }
        }
    }

    #[test]
    fn inverse_distance_rejects_coincident_vertices() {
        let cloud = VertexCloud::new(DMatrix::from_row_slice(2, 1, &[1.0, 1.0])).unwrap();
        let k = KernelSpec::new(KernelKind::InvDist, 1.0, 2.0).unwrap();
        assert!(matches!(geometric_weights(&cloud, &k), Err(Error::Singular(_))));
    }

    #[test]
    fn kernel_spec_validation() {
        assert!(KernelSpec::new(KernelKind::GaussSq, 0.0, 1.0).is_err());
        assert!(KernelSpec::new(KernelKind::GaussSq, 1.0, -1.0).is_err());
    }

    #[test]
    fn similarity_identical_rows_get_full_weight() {
        let x = ObservationMatrix::new(DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, -1.0, 0.5])).unwrap();
        let s = similarity_weights(&x, &gauss(1.0, 10.0)).unwrap();
        assert!(!s.degenerate);
        assert_eq!(s.graph.weight(0, 1), 1.0);
        assert!(s.graph.weight(0, 2) < 1.0);
    }

    #[test]
    fn similarity_global_normalization() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let x = ObservationMatrix::new(DMatrix::from_fn(6, 20, |_, _| StandardNormal.sample(&mut rng))).unwrap();
        let (r2, flag) = similarity_distances(&x, SimilarityNormalization::Global);
        assert!(!flag);
        assert!((r2.sum() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn similarity_degenerate_input() {
        let x = ObservationMatrix::new(DMatrix::from_element(4, 3, 0.7)).unwrap();
        let s = similarity_weights(&x, &gauss(1.0, 1.0)).unwrap();
        assert!(s.degenerate);
        assert_eq!(s.graph.edges().len(), 6);
        assert!(s.graph.edges().iter().all(|e| e.2 == 1.0));
    }

    #[test]
    fn pair_energy_tracks_correlation() {
        // x(1) = 0.6 x(0) + 0.8 e, so R_x(0,1) = 0.6 and both have unit variance
        let p = 10_000;
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let mut data = DMatrix::zeros(3, p);
        for c in 0..p {
            let a: f64 = StandardNormal.sample(&mut rng);
            let e: f64 = StandardNormal.sample(&mut rng);
            let f: f64 = StandardNormal.sample(&mut rng);
            data[(0, c)] = a;
            data[(1, c)] = 0.6 * a + 0.8 * e;
            data[(2, c)] = f;
        }
        let x = ObservationMatrix::new(data.clone()).unwrap();
        let (r2, _) = similarity_distances(&x, SimilarityNormalization::PairEnergy);
        let rx = &data * data.transpose() / p as f64;
        for (m, n) in [(0, 1), (0, 2), (1, 2)] {
            assert!((r2[(m, n)] - 2.0 * (1.0 - rx[(m, n)])).abs() < 0.05);
        }
        assert!((r2[(0, 1)] - 0.8).abs() < 0.05);
    }

    #[test]
    fn generalized_distance_cases() {
        let a = DVector::from_vec(vec![3.0, 4.0]);
        let b = DVector::zeros(2);
        assert_eq!(generalized_distance(&a, &b, &DMatrix::identity(2, 2)).unwrap(), 25.0);
        assert_eq!(generalized_distance(&a, &b, &DMatrix::zeros(2, 2)).unwrap(), 0.0);
        let neg = DMatrix::from_row_slice(2, 2, &[-1.0, 0.0, 0.0, -1.0]);
        assert!(generalized_distance(&a, &b, &neg).is_err());
    }

    #[test]
    fn generalized_distance_orthonormal_transform() {
        let t: f64 = 0.4;
        let uc = DMatrix::from_row_slice(3, 2, &[t.cos(), 0.0, t.sin(), 0.0, 0.0, 1.0]);
        let h = &uc * uc.transpose();
        let a = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let b = DVector::from_vec(vec![0.2, 0.3, -1.0]);
        let direct = (uc.transpose() * (&a - &b)).norm_squared();
        assert!((generalized_distance(&a, &b, &h).unwrap() - direct).abs() < 1e-10);
    }

    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, depth: u32) -> f64 {
        let c = 0.5 * (a + b);
        let whole = (b - a) / 6.0 * (f(a) + 4.0 * f(c) + f(b));
        fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, depth: u32) -> f64 {
            let c = 0.5 * (a + b);
            let l = (c - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + c)) + f(c));
            let r = (b - c) / 6.0 * (f(c) + 4.0 * f(0.5 * (c + b)) + f(b));
            if depth == 0 || (l + r - whole).abs() < 1e-13 {
                l + r + (l + r - whole) / 15.0
            } else {
                rec(f, a, c, l, depth - 1) + rec(f, c, b, r, depth - 1)
            }
        }
        rec(f, a, b, whole, depth)
    }

    #[test]
    fn arclength_matches_quadrature() {
        let f = |v: f64| (1.0 + v * v).sqrt() / (4.0 * PI);
        let q = simpson(&f, PI, 2.0 * PI, 40);
        assert!((swiss_arclength(PI, 2.0 * PI) - q).abs() < 1e-8);
        assert_eq!(swiss_arclength(2.0, 2.0), 0.0);
    }

    #[test]
    fn swiss_roll_is_deterministic() {
        let k = gauss(0.5, 0.6);
        let a = swiss_roll_graph(100, 7, &k).unwrap();
        let b = swiss_roll_graph(100, 7, &k).unwrap();
        assert_eq!(a, b);
        assert!(a.params.iter().all(|&(u, v)| (-1.0..=1.0).contains(&u) && (PI..=4.0 * PI).contains(&v)));
        let c = swiss_roll_graph(100, 8, &k).unwrap();
        assert_ne!(a.graph, c.graph);
    }

    #[test]
    fn swiss_roll_same_v_uses_height_only() {
        let r2 = swiss_arclength(3.0, 3.0).powi(2) + (0.4f64 - (-0.1)).powi(2);
        assert!((r2.sqrt() - 0.5).abs() < 1e-15);
    }
}
