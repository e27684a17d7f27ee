//! Geometric graphs: kernel weights on a swiss roll and similarity weights from observations.

use graphtopo::geometric::{similarity_weights, swiss_roll_graph, KernelKind, KernelSpec};
use graphtopo::samples;
use graphtopo::simulate::{simulate, SimMode, SimSpec};

fn main() -> Result<(), graphtopo::error::Error> {
    let kernel = KernelSpec::new(KernelKind::GaussSq, 1.0, 2.0)?;
    let roll = swiss_roll_graph(200, 4, &kernel)?;
    let g = &roll.graph;
    let degrees = g.degrees();
    println!(
        "swiss roll: {} vertices, {} edges, connected {}, degree range [{:.2}, {:.2}]",
        g.n(),
        g.edges().len(),
        g.is_connected(),
        degrees.min(),
        degrees.max()
    );

    let truth = samples::circuit_graph();
    let x = simulate(&truth, &SimSpec::new(SimMode::Diffusion { h: vec![0.0, 1.0] }, 2, 500)?)?;
    let sim = similarity_weights(&x, &KernelSpec::new(KernelKind::GaussSq, 0.2, 0.5)?)?;
    println!("similarity graph from diffusion data: {} edges", sim.graph.edges().len());
    for (i, j, w) in sim.graph.edges().into_iter().take(6) {
        println!("  ({i},{j}) weight {w:.3}, true weight {:.2}", truth.weight(i, j));
    }
    Ok(())
}
