//! Station centralities and population estimated from net passenger outflows.

use graphtopo::graph::{laplacian, LaplacianKind};
use graphtopo::metro::{betweenness, closeness_vitality, fick_population, FlowVector};
use graphtopo::samples;
use nalgebra::DVector;

fn main() -> Result<(), graphtopo::error::Error> {
    let g = samples::social_graph();
    let b = betweenness(&g);
    let v = closeness_vitality(&g);
    for i in 0..g.n() {
        println!("station {i}: betweenness {:5.2}  closeness vitality {:5.1}", b[i], v[i]);
    }

    let l = laplacian(&g, LaplacianKind::Combinatorial)?;
    let phi = DVector::from_vec(vec![120.0, 80.0, 200.0, 60.0, 150.0, 90.0, 40.0, 110.0]);
    let k = 0.05;
    let q = FlowVector::new(l.matrix() * &phi * (-k))?;
    let est = fick_population(&l, &q, k)?;
    println!("recovered population (minimum shifted to 0): {:.1?}", est.as_slice());
    Ok(())
}
