//! Spectral cuts of a market graph, cut-tree allocation and an out-of-sample comparison.

use graphtopo::portfolio::{
    allocate, equal_weights, market_graph, repeated_cuts, sharpe, AllocationScheme, CutKind, LeafSelect, ReturnSeries,
};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn main() -> Result<(), graphtopo::error::Error> {
    // three sectors of four assets each, driven by sector factors
    let (t, n) = (500, 12);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let factors = DMatrix::<f64>::from_fn(t, 3, |_, _| rng.sample::<f64, _>(StandardNormal) * 0.01);
    let returns =
        DMatrix::from_fn(t, n, |p, a| 0.0004 + factors[(p, a / 4)] + 0.004 * rng.sample::<f64, _>(StandardNormal));
    let r = ReturnSeries::new(returns)?;
    let train = r.window(0, 250)?;
    let test = r.window(250, 250)?;

    let g = market_graph(&train)?;
    let cuts = repeated_cuts(&g, 2, CutKind::Normalized, LeafSelect::LargestSize)?;
    println!("clusters: {:?}", cuts.tree.leaf_sets());
    for scheme in [AllocationScheme::As1, AllocationScheme::As2] {
        let w = allocate(&cuts.tree, scheme)?;
        println!("{scheme:?} weights: {:.4?}", w.as_slice());
        println!("{scheme:?} annualized Sharpe: {:.3}", sharpe(&test, &w, Some(252.0))?);
    }
    println!("equal-weight annualized Sharpe: {:.3}", sharpe(&test, &equal_weights(n), Some(252.0))?);
    Ok(())
}
