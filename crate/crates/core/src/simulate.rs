//! Seeded random graph signals.
//!
//! Snapshot `p` draws from `ChaCha8Rng::seed_from_u64(seed)` switched to stream `p`, so snapshots can be
//! generated in any order or in parallel with identical results.

use nalgebra::{DMatrix, DVector};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian, normalized_laplacian, Graph, LaplacianKind};
use crate::learning::ObservationMatrix;
use crate::physical::{circuit_solve, BoundaryCondition};
use crate::spectral::{eig_sym, SpectralDecomp};

/// Name of the variate generator, recorded in run reports.
pub const GENERATOR: &str =
    "rand_chacha 0.9 ChaCha8Rng seed_from_u64(seed) + set_stream(snapshot); rand_distr 0.5 StandardNormal";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpectralBasis {
    #[default]
    Laplacian,
    Adjacency,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case", deny_unknown_fields)]
pub enum SimMode {
    /// White sources at every vertex, one of them compensating the rest; L x = ε with x(0) = 0.
    Sources,
    /// ±ε injected at two random vertices; L x = i with x(0) = 0.
    Dipole,
    /// Two random vertices pinned to independent normals, harmonic elsewhere.
    PinnedPair,
    /// x = Σ_m h_m L_N^m ε with the normalized Laplacian.
    Diffusion { h: Vec<f64> },
    /// x = A^K Σ a_i δ(n − n_i) over `spikes` random vertices.
    AdjacencyShift {
        k: usize,
        spikes: usize,
        #[serde(default)]
        amplitudes: Option<Vec<f64>>,
    },
    /// x = Σ a_k u_k over the given eigenvector indices; random normal amplitudes when not given.
    Bandlimited {
        indices: Vec<usize>,
        #[serde(default)]
        amplitudes: Option<Vec<f64>>,
        #[serde(default)]
        basis: SpectralBasis,
    },
}

impl SimMode {
    pub fn name(&self) -> &'static str {
        match self {
            SimMode::Sources => "sources",
            SimMode::Dipole => "dipole",
            SimMode::PinnedPair => "pinned_pair",
            SimMode::Diffusion { .. } => "diffusion",
            SimMode::AdjacencyShift { .. } => "adjacency_shift",
            SimMode::Bandlimited { .. } => "bandlimited",
        }
    }

    /// Builds a mode from its name and a JSON object of parameters.
    pub fn from_name_and_params(name: &str, params: &serde_json::Value) -> Result<Self> {
        let mut obj = match params {
            serde_json::Value::Object(m) => m.clone(),
            serde_json::Value::Null => serde_json::Map::new(),
            other => return Err(Error::Parse(format!("mode parameters must be a JSON object, got {other}"))),
        };
        obj.insert("mode".into(), serde_json::Value::String(name.to_string()));
        serde_json::from_value(serde_json::Value::Object(obj)).map_err(|e| Error::Parse(format!("mode {name}: {e}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimSpec {
    pub mode: SimMode,
    pub seed: u64,
    /// Number of snapshots (columns).
    pub p: usize,
    /// Standard deviation of additive white noise; 0 for none.
    #[serde(default)]
    pub noise: f64,
}

impl SimSpec {
    pub fn new(mode: SimMode, seed: u64, p: usize) -> Result<Self> {
        let spec = Self { mode, seed, p, noise: 0.0 };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_noise(mut self, sigma: f64) -> Result<Self> {
        self.noise = sigma;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p == 0 {
            return Err(Error::invalid("snapshot count must be >= 1"));
        }
        if !(self.noise >= 0.0) || !self.noise.is_finite() {
            return Err(Error::invalid(format!("noise level must be finite and >= 0, got {}", self.noise)));
        }
        match &self.mode {
            SimMode::Diffusion { h } => {
                if h.is_empty() || h.iter().any(|v| !v.is_finite()) {
                    return Err(Error::invalid("diffusion needs finite coefficients h_0..h_M"));
                }
            }
            SimMode::AdjacencyShift { spikes, amplitudes, .. } => {
                if *spikes == 0 {
                    return Err(Error::invalid("adjacency shift needs at least one spike"));
                }
                if let Some(a) = amplitudes {
                    if a.len() != *spikes {
                        return Err(Error::invalid(format!("{} amplitudes for {spikes} spikes", a.len())));
                    }
                }
            }
            SimMode::Bandlimited { indices, amplitudes, .. } => {
                if indices.is_empty() {
                    return Err(Error::invalid("band-limited signal needs at least one eigenvector index"));
                }
                if let Some(a) = amplitudes {
                    if a.len() != indices.len() {
                        return Err(Error::invalid(format!("{} amplitudes for {} indices", a.len(), indices.len())));
                    }
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// Random stream for one snapshot.
pub fn snapshot_rng(seed: u64, snapshot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(snapshot as u64);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| normal(rng))
}

/// Precomputed per-graph state shared by all snapshots.
enum Prepared {
    Grounded(GroundedSolver),
    Pinned(crate::graph::Laplacian),
    Filter(DMatrix<f64>),
    Shift(DMatrix<f64>),
    Basis(SpectralDecomp),
}

/// Solves L x = i with x(0) = 0.
struct GroundedSolver {
    chol: nalgebra::Cholesky<f64, nalgebra::Dyn>,
    n: usize,
}

impl GroundedSolver {
    fn new(g: &Graph) -> Result<Self> {
        let l = laplacian(g, LaplacianKind::Combinatorial)?;
        let n = g.n();
        let reduced = l.matrix().view((1, 1), (n - 1, n - 1)).into_owned();
        let chol = reduced.cholesky().ok_or_else(|| Error::Singular("grounded Laplacian is singular".into()))?;
        Ok(Self { chol, n })
    }

    fn solve(&self, i: &DVector<f64>) -> DVector<f64> {
        let rhs = i.rows(1, self.n - 1).into_owned();
        let sol = self.chol.solve(&rhs);
        let mut x = DVector::zeros(self.n);
        x.rows_mut(1, self.n - 1).copy_from(&sol);
        x
    }
}

fn require_connected(g: &Graph, mode: &SimMode) -> Result<()> {
    if g.is_connected() {
        Ok(())
    } else {
        Err(Error::Disconnected(format!("mode {} needs a connected graph", mode.name())))
    }
}

fn prepare(g: &Graph, mode: &SimMode) -> Result<Prepared> {
    let n = g.n();
    Ok(match mode {
        SimMode::Sources | SimMode::Dipole => {
            require_connected(g, mode)?;
            if n < 2 {
                return Err(Error::invalid(format!("mode {} needs at least 2 vertices", mode.name())));
            }
            Prepared::Grounded(GroundedSolver::new(g)?)
        }
        SimMode::PinnedPair => {
            require_connected(g, mode)?;
            if n < 2 {
                return Err(Error::invalid("pinned-pair mode needs at least 2 vertices"));
            }
            Prepared::Pinned(laplacian(g, LaplacianKind::Combinatorial)?)
        }
        SimMode::Diffusion { h } => {
            let ln = normalized_laplacian(g, true)?;
            let mut power = DMatrix::identity(n, n);
            let mut filter = DMatrix::zeros(n, n);
            for (m, &hm) in h.iter().enumerate() {
                if m > 0 {
                    power = &power * ln.matrix();
                }
                filter += &power * hm;
            }
            Prepared::Filter(filter)
        }
        SimMode::AdjacencyShift { k, spikes, .. } => {
            if *spikes > n {
                return Err(Error::invalid(format!("{spikes} spikes on {n} vertices")));
            }
            let a = g.weights();
            let mut shift = DMatrix::identity(n, n);
            for _ in 0..*k {
                shift = &shift * a;
            }
            Prepared::Shift(shift)
        }
        SimMode::Bandlimited { indices, basis, .. } => {
            if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
                return Err(Error::invalid(format!("eigenvector index {bad} out of range for n={n}")));
            }
            let m = match basis {
                SpectralBasis::Laplacian => laplacian(g, LaplacianKind::Combinatorial)?.into_matrix(),
                SpectralBasis::Adjacency => g.weights().clone(),
            };
            Prepared::Basis(eig_sym(&m)?)
        }
    })
}

/// Source vector of the `sources` mode for one snapshot, with the index of the compensating vertex.
/// The compensating entry is minus the sum of the others, so adding it last gives exactly zero.
pub fn compensated_sources(rng: &mut ChaCha8Rng, n: usize) -> (DVector<f64>, usize) {
    let mut eps = normals(rng, n);
    let c = rng.random_range(0..n);
    eps[c] = 0.0;
    let rest: f64 = (0..n).filter(|&v| v != c).map(|v| eps[v]).sum();
    eps[c] = -rest;
    (eps, c)
}

fn snapshot(g: &Graph, spec: &SimSpec, prep: &Prepared, p: usize) -> Result<DVector<f64>> {
    let n = g.n();
    let mut rng = snapshot_rng(spec.seed, p);
    let mut x = match (&spec.mode, prep) {
        (SimMode::Sources, Prepared::Grounded(s)) => {
            let (eps, _) = compensated_sources(&mut rng, n);
            s.solve(&eps)
        }
        (SimMode::Dipole, Prepared::Grounded(s)) => {
            let pair = sample(&mut rng, n, 2);
            let e = normal(&mut rng);
            let mut i = DVector::zeros(n);
            i[pair.index(0)] = e;
            i[pair.index(1)] = -e;
            s.solve(&i)
        }
        (SimMode::PinnedPair, Prepared::Pinned(l)) => {
            let pair = sample(&mut rng, n, 2);
            let bc =
                BoundaryCondition::from_pairs([(pair.index(0), normal(&mut rng)), (pair.index(1), normal(&mut rng))])?;
            circuit_solve(l, &bc, None)?
        }
        (SimMode::Diffusion { .. }, Prepared::Filter(h)) => h * normals(&mut rng, n),
        (SimMode::AdjacencyShift { spikes, amplitudes, .. }, Prepared::Shift(ak)) => {
            let picks = sample(&mut rng, n, *spikes);
            let mut d = DVector::zeros(n);
            for (i, v) in picks.iter().enumerate() {
                d[v] = amplitudes.as_ref().map_or(1.0, |a| a[i]);
            }
            ak * d
        }
        (SimMode::Bandlimited { indices, amplitudes, .. }, Prepared::Basis(dec)) => {
            let mut x = DVector::zeros(n);
            for (i, &k) in indices.iter().enumerate() {
                let a = match amplitudes {
                    Some(a) => a[i],
                    None => normal(&mut rng),
                };
                x += dec.vector(k) * a;
            }
            x
        }
        _ => unreachable!("prepared state always matches the mode"),
    };
    if spec.noise > 0.0 {
        for v in x.iter_mut() {
            *v += spec.noise * normal(&mut rng);
        }
    }
    Ok(x)
}

/// N×P matrix of simulated snapshots.
pub fn simulate(g: &Graph, spec: &SimSpec) -> Result<ObservationMatrix> {
    spec.validate()?;
    let n = g.n();
    if n == 0 {
        return Err(Error::invalid("cannot simulate on an empty graph"));
    }
    let prep = prepare(g, &spec.mode)?;
    let cols: Vec<DVector<f64>> =
        (0..spec.p).into_par_iter().map(|p| snapshot(g, spec, &prep, p)).collect::<Result<_>>()?;
    ObservationMatrix::new(DMatrix::from_columns(&cols))
}

/// Serial reference implementation of [`simulate`].
pub fn simulate_serial(g: &Graph, spec: &SimSpec) -> Result<ObservationMatrix> {
    spec.validate()?;
    let prep = prepare(g, &spec.mode)?;
    let cols: Vec<DVector<f64>> = (0..spec.p).map(|p| snapshot(g, spec, &prep, p)).collect::<Result<_>>()?;
    ObservationMatrix::new(DMatrix::from_columns(&cols))
}
