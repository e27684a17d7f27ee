use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::graph::{Laplacian, LaplacianKind};
use crate::learning::ObservationMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct SmoothLearnResult {
    pub laplacian: Laplacian,
    pub y: ObservationMatrix,
    /// ½‖Y − X‖²_F + α Tr(YᵀLY) + β‖L‖²_F, first at the starting point, then after each alternation.
    pub objective: Vec<f64>,
}

const INNER_ITERS: usize = 500;

/// Alternates an L-step over {L symmetric, Tr L = N, L_ij <= 0, L·1 = 0} with the closed-form
/// Y-step Y = (I + 2αL)⁻¹X.
///
/// The feasible Laplacians are exactly L(w) = Σ_{i<j} w_ij (e_i − e_j)(e_i − e_j)ᵀ with w >= 0 and
/// Σ w = N/2, so the L-step runs projected gradient on the edge weights with an exact simplex
/// projection and step 1/(4Nβ) (a bound on the gradient's Lipschitz constant).
pub fn smooth_learn(x: &ObservationMatrix, alpha: f64, beta: f64, outer_iters: usize) -> Result<SmoothLearnResult> {
    if !(alpha >= 0.0) || !(beta > 0.0) {
        return Err(Error::invalid(format!("need alpha >= 0 and beta > 0, got {alpha}, {beta}")));
    }
    let n = x.n();
    if n < 2 {
        return Err(Error::invalid("smoothness learning needs at least 2 vertices"));
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let budget = n as f64 / 2.0;
    let mut w = vec![budget / pairs.len() as f64; pairs.len()];
    let mut y = x.data().clone();
    let objective_of = |l: &DMatrix<f64>, y: &DMatrix<f64>| {
        0.5 * (y - x.data()).norm_squared() + alpha * (y.transpose() * l * y).trace() + beta * l.norm_squared()
    };

    let mut l = assemble(n, &pairs, &w);
    let mut objective = vec![objective_of(&l, &y)];
    let step = 1.0 / (4.0 * n as f64 * beta);
    for _ in 0..outer_iters {
        let dist: Vec<f64> = pairs.iter().map(|&(i, j)| (y.row(i) - y.row(j)).norm_squared()).collect();
        for _ in 0..INNER_ITERS {
            let grad: Vec<f64> = pairs
                .iter()
                .zip(&dist)
                .map(|(&(i, j), d)| alpha * d + 2.0 * beta * (l[(i, i)] + l[(j, j)] - 2.0 * l[(i, j)]))
                .collect();
            let moved: Vec<f64> = w.iter().zip(&grad).map(|(wi, g)| wi - step * g).collect();
            let next = project_simplex(&moved, budget);
            let change: f64 = next.iter().zip(&w).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            w = next;
            l = assemble(n, &pairs, &w);
            if change <= 1e-12 * budget {
                break;
            }
        }
        y = y_step(&l, x.data(), alpha)?;
        objective.push(objective_of(&l, &y));
    }
    Ok(SmoothLearnResult {
        laplacian: Laplacian::from_estimate(l, LaplacianKind::Combinatorial),
        y: ObservationMatrix::new(y)?,
        objective,
    })
}

/// Minimizer of ½‖Y − X‖²_F + α Tr(YᵀLY) over Y.
pub(crate) fn y_step(l: &DMatrix<f64>, x: &DMatrix<f64>, alpha: f64) -> Result<DMatrix<f64>> {
    if alpha == 0.0 {
        return Ok(x.clone());
    }
    let n = l.nrows();
    let m = DMatrix::identity(n, n) + l * (2.0 * alpha);
    m.cholesky().map(|c| c.solve(x)).ok_or_else(|| Error::Singular("I + 2αL is not positive definite".into()))
}

fn assemble(n: usize, pairs: &[(usize, usize)], w: &[f64]) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(n, n);
    for (&(i, j), &v) in pairs.iter().zip(w) {
        l[(i, j)] -= v;
        l[(j, i)] -= v;
        l[(i, i)] += v;
        l[(j, j)] += v;
    }
    l
}

/// Euclidean projection onto {w >= 0, Σ w = s}.
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
