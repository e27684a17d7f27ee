//! Learning the weights of a graph from diffusion data with four methods.

use graphtopo::graph::normalized_laplacian;
use graphtopo::learning::{
    correlation_matrix, mse_db, neighborhood_regression, polynomial_fit_eigenvalues, precision_weights, smooth_learn,
    symmetrize_magnitude, PolyFitConfig,
};
use graphtopo::samples;
use graphtopo::simulate::{simulate, SimMode, SimSpec};
use graphtopo::sparse::{glasso, GlassoConfig, LassoConfig};

const RHO_REGRESS: f64 = 0.2;
const RHO_GLASSO: f64 = 0.3;

fn main() -> Result<(), graphtopo::error::Error> {
    let g = samples::circuit_graph();
    let truth = normalized_laplacian(&g, true)?.to_weights();
    let spec = SimSpec::new(SimMode::Diffusion { h: vec![0.3, 0.2, 0.5] }, 42, 10_000)?;
    let x = simulate(&g, &spec)?;
    let r = correlation_matrix(&x, false);
    println!("zero estimate:          {:6.1} dB", mse_db(&(&truth * 0.0), &truth)?);

    let fit = polynomial_fit_eigenvalues(&r, &PolyFitConfig::new(2))?;
    println!("polynomial fit:         {:6.1} dB", mse_db(&fit.laplacian.to_weights(), &truth)?);

    let beta = neighborhood_regression(&x, &LassoConfig::new(RHO_REGRESS).with_max_iter(5000))?;
    let w = symmetrize_magnitude(&beta);
    println!("neighborhood regression:{:6.1} dB", mse_db(w.weights(), &truth)?);

    let q = glasso(&r, &GlassoConfig::new(RHO_GLASSO))?;
    println!("graphical lasso:        {:6.1} dB", mse_db(precision_weights(&q.q)?.weights(), &truth)?);

    // the smoothness prior suits low-pass data
    let smooth = simulate(&g, &SimSpec::new(SimMode::Diffusion { h: vec![1.0, -0.5] }, 42, 500)?)?;
    let s = smooth_learn(&smooth, 0.01, 1.0, 10)?;
    println!("smoothness prior:       {:6.1} dB", mse_db(&s.laplacian.to_weights(), &truth)?);
    Ok(())
}
