//! Ranking of eight linked pages, plain and damped.

use graphtopo::physical::{pagerank, Damping};
use graphtopo::samples;

fn main() -> Result<(), graphtopo::error::Error> {
    let g = samples::page_graph();
    let plain = pagerank(&g, None, 1e-6, 1000)?;
    println!("undamped ({} iterations, mean 1):", plain.iterations);
    for (i, r) in plain.rank.iter().enumerate() {
        println!("  page {i}: {r:.3}");
    }
    let damped = pagerank(&g, Some(Damping::default()), 1e-6, 1000)?;
    println!("damped ({} iterations, sum {:.3}):", damped.iterations, damped.rank.sum());
    for (i, r) in damped.rank.iter().enumerate() {
        println!("  page {i}: {r:.3}");
    }
    Ok(())
}
