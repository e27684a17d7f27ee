//! Hitting times, commute times, effective resistance and walk steady states.

use graphtopo::physical::{hitting_times, stationary_distribution, walk_steady_state, ResistanceMetric, WalkKind};
use graphtopo::samples;
use graphtopo::verify::hitting_time_monte_carlo;

fn main() -> Result<(), graphtopo::error::Error> {
    let g = samples::circuit_graph();
    let h = hitting_times(&g, 0)?;
    println!(
        "expected steps to reach vertex 0: {:?}",
        h.iter().map(|x| (x * 1000.0).round() / 1000.0).collect::<Vec<_>>()
    );

    let m = ResistanceMetric::new(&g)?;
    let back = hitting_times(&g, 7)?;
    println!("R_eff(7, 0) = {:.4}", m.resistance(7, 0));
    println!("CT(7, 0)    = {:.4}", m.commute_time(7, 0));
    println!("h(7,0) + h(0,7) = {:.4}", h[7] + back[0]);

    let (mean, se) = hitting_time_monte_carlo(&g, 7, 0, 200_000, 1);
    println!("simulated h(7,0) = {mean:.3} ± {se:.3} (exact {:.3})", h[7]);

    println!("vertex-centric steady state: {:.4?}", walk_steady_state(&g, WalkKind::VertexCentric)?.as_slice());
    println!("stationary distribution d/D:  {:.4?}", stationary_distribution(&g)?.as_slice());
    Ok(())
}
