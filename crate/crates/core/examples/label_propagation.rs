//! Semi-supervised labels spread over a graph from two labeled vertices.

use graphtopo::physical::{harmonic_labels, label_propagation, BoundaryCondition};
use graphtopo::samples;

fn main() -> Result<(), graphtopo::error::Error> {
    let g = samples::circuit_graph();
    let labels = BoundaryCondition::from_pairs([(0, -1.0), (7, 1.0)])?;
    let it = label_propagation(&g, &labels, 10_000, 1e-12)?;
    let direct = harmonic_labels(&g, &labels)?;
    println!("iterative scores after {} steps: {:.4?}", it.iterations, it.scores.as_slice());
    println!("direct harmonic solution:        {:.4?}", direct.as_slice());
    let classes: Vec<i32> = it.scores.iter().map(|s| if *s >= 0.0 { 1 } else { -1 }).collect();
    println!("classes: {classes:?}");
    Ok(())
}
