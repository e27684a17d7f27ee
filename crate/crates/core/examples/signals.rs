//! The six random signal models on the eight-vertex circuit graph.

use graphtopo::graph::{laplacian, smoothness, LaplacianKind};
use graphtopo::samples;
use graphtopo::simulate::{simulate, SimMode, SimSpec, SpectralBasis};

fn main() -> Result<(), graphtopo::error::Error> {
    let g = samples::circuit_graph();
    let l = laplacian(&g, LaplacianKind::Combinatorial)?;
    let modes = [
        SimMode::Sources,
        SimMode::Dipole,
        SimMode::PinnedPair,
        SimMode::Diffusion { h: vec![0.3, 0.2, 0.5] },
        SimMode::AdjacencyShift { k: 2, spikes: 2, amplitudes: None },
        SimMode::Bandlimited { indices: vec![0, 1, 2], amplitudes: None, basis: SpectralBasis::Laplacian },
    ];
    for mode in modes {
        let name = mode.name();
        let x = simulate(&g, &SimSpec::new(mode, 7, 200)?)?;
        let mean_smoothness: f64 =
            (0..x.p()).map(|p| smoothness(&l, &x.data().column(p).clone_owned()).unwrap_or(f64::NAN)).sum::<f64>()
                / x.p() as f64;
        println!(
            "{name:>16}: first snapshot {:6.3?}  mean smoothness {mean_smoothness:.3}",
            x.data().column(0).iter().collect::<Vec<_>>()
        );
    }
    Ok(())
}
