//! Denoising a signal known to come from a few point sources.

use graphtopo::graph::{laplacian, LaplacianKind, SourceVector};
use graphtopo::physical::{circuit_solve, sparse_source_denoise, BoundaryCondition};
use graphtopo::samples;
use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn main() -> Result<(), graphtopo::error::Error> {
    let g = samples::random_connected_graph(40, 0.1, 5);
    let l = laplacian(&g, LaplacianKind::Combinatorial)?;
    let mut i = DVector::zeros(40);
    i[10] = 1.0;
    i[25] = 0.5;
    i[33] = -1.5;
    let clean = circuit_solve(&l, &BoundaryCondition::from_pairs([(0, 0.0)])?, Some(&SourceVector::new(i)?))?;

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let noise = Normal::new(0.0, 0.01 * clean.amax()).expect("positive std");
    let mut y = clean.clone();
    for v in y.iter_mut().skip(1) {
        *v += noise.sample(&mut rng);
    }
    let est = sparse_source_denoise(&l, &y, 3, 0)?;

    let snr = |x: &DVector<f64>| 10.0 * (clean.norm_squared() / (x - &clean).norm_squared()).log10();
    println!("input SNR    {:5.1} dB", snr(&y));
    println!("denoised SNR {:5.1} dB", snr(&est));
    Ok(())
}
