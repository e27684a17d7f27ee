//! Separable Fourier basis of a lattice, a rank-1 test and subsampling.

use graphtopo::lattice::{kron_sum_adjacency, separability_check, separable_gdft, subsample, Lattice, SamplingMap};
use graphtopo::spectral::eig_sym;

fn main() -> Result<(), graphtopo::error::Error> {
    let lat = Lattice::new(vec![3, 4])?;
    let g = kron_sum_adjacency(&lat)?;
    let sep = separable_gdft(&lat)?;
    let dense = eig_sym(g.weights())?;
    let mut a: Vec<f64> = sep.eigenvalues().iter().copied().collect();
    a.sort_by(f64::total_cmp);
    let gap = a.iter().zip(dense.eigenvalues().iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    println!("3x4 lattice: {} vertices, separable vs dense eigenvalues differ by {gap:.2e}", lat.n());

    let x = sep.vector(5);
    let s = separability_check(&x, &lat)?;
    println!("basis vector 5 is rank 1: {} (sigma2/sigma1 = {:.1e})", s.is_rank1, s.ratio);
    let mixed = sep.vector(0) + sep.vector(lat.n() - 1);
    println!("sum of two basis vectors is rank 1: {}", separability_check(&mixed, &lat)?.is_rank1);

    let keep: Vec<usize> = (0..lat.n()).filter(|&k| lat.coords(k)[1] < 2).collect();
    let sub = subsample(&g, &SamplingMap::new(keep, lat.n())?)?;
    println!("first two rows kept: {} vertices, {} edges", sub.n(), sub.edges().len());
    Ok(())
}
