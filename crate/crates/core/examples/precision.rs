//! Precision matrices: exact inverse, normalization and the graphical LASSO.

use graphtopo::sparse::{glasso, normalize_precision, precision_matrix, GlassoConfig};
use graphtopo::verify::chain_correlation;

fn main() -> Result<(), graphtopo::error::Error> {
    let r = chain_correlation();
    println!("correlation of a 4-vertex chain:{r:.4}");
    let q = precision_matrix(&r, 1e-12)?;
    println!("precision (rank {}):{:.4}", q.rank, q.q);
    println!("normalized:{:.4}", normalize_precision(&q.q)?);

    for rho in [0.0, 0.05, 0.2] {
        let res = glasso(&r, &GlassoConfig::new(rho))?;
        let nnz = res.q.iter().filter(|v| v.abs() > 1e-8).count();
        println!("glasso rho = {rho}: {} sweeps, {nnz} nonzero entries{:.4}", res.sweeps, res.q);
    }
    Ok(())
}
