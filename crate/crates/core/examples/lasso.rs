//! Sparse recovery with iterative soft thresholding.

use graphtopo::sparse::{lasso_ista, LassoConfig};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), graphtopo::error::Error> {
    let (m, n, k) = (40, 60, 4);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let a = DMatrix::<f64>::from_fn(m, n, |_, _| rng.sample::<f64, _>(StandardNormal) / (m as f64).sqrt());
    let mut x = DVector::zeros(n);
    for i in [5, 17, 31, 48].into_iter().take(k) {
        x[i] = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * rng.random_range(0.5..1.5);
    }
    let y = &a * &x;

    let sol = lasso_ista(&a, &y, &LassoConfig::new(0.01).tracked())?;
    println!("{} iterations, converged: {}", sol.iterations, sol.converged);
    println!("objective: first {:.4}, last {:.6}", sol.objective[0], sol.objective[sol.objective.len() - 1]);
    for i in 0..n {
        if sol.x[i].abs() >= 0.05 || x[i] != 0.0 {
            println!("  x[{i:2}] true {:+.3} estimated {:+.3}", x[i], sol.x[i]);
        }
    }
    Ok(())
}
