//! Voltages of a resistor network and absorption probabilities of a random walk.

use graphtopo::graph::{laplacian, LaplacianKind, SourceVector};
use graphtopo::physical::{absorbing_probabilities, circuit_solve, BoundaryCondition};
use graphtopo::samples;
use nalgebra::DVector;

fn main() -> Result<(), graphtopo::error::Error> {
    let g = samples::circuit_graph();
    let l = laplacian(&g, LaplacianKind::Combinatorial)?;

    // 1 V between vertices 0 and 4
    let bc = BoundaryCondition::from_pairs([(0, 0.0), (4, 1.0)])?;
    let v = circuit_solve(&l, &bc, None)?;
    println!("voltages with 0 grounded and 4 at 1 V:");
    for (i, x) in v.iter().enumerate() {
        println!("  v({i}) = {x:.4}");
    }

    // 1 A injected at vertex 7 and drawn out at vertex 2, vertex 0 grounded
    let mut i = DVector::zeros(8);
    i[7] = 1.0;
    i[2] = -1.0;
    let v = circuit_solve(&l, &BoundaryCondition::from_pairs([(0, 0.0)])?, Some(&SourceVector::new(i)?))?;
    println!("voltage drop 7 -> 2 for a 1 A source: {:.4} V", v[7] - v[2]);

    let social = samples::social_graph();
    let bc = BoundaryCondition::from_pairs([(4, 1.0), (3, 0.0)])?;
    let p = absorbing_probabilities(&social, &bc)?;
    println!(
        "probability of reaching 4 before 3: {:?}",
        p.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );
    Ok(())
}
