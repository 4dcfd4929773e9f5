//! The section `u(t)(s) = s` on the sup family: zero gradient, but its norm
//! jumps from 1 to 1/2 and the scalar characterization loses its hypothesis.

use monofam::harness::fixtures::counterexample_section;
use monofam::sobolev::{minimal_upper_gradient, reshetnyak_check, scalar_characterization_check};
use monofam::{Exponent, Result};
use nalgebra::DVector;

fn main() -> Result<()> {
    for n in [64, 128, 256] {
        let u = counterexample_section(n, 256)?;
        let g = minimal_upper_gradient(&u, Exponent::TWO);
        let norms = u.node_norms();
        let scalar = scalar_characterization_check(&u, Exponent::TWO, &vec![1.0; n - 1], 1e-12)?;
        println!(
            "n = {n}: gradient {:.1e}, norms {} -> {}, scalar check {} with jump quotient {}",
            g.lp_norm,
            norms[0],
            norms[n - 1],
            scalar.status,
            scalar.metrics["max_scalar_quotient"]
        );
    }
    let u = counterexample_section(256, 256)?;
    let probe = DVector::zeros(256);
    let r = reshetnyak_check(&u, Exponent::TWO, &[probe], 1e-12)?;
    println!("distance-to-zero probe: {} ({})", r.status, r.witness.map(|w| w.note).unwrap_or_default());
    Ok(())
}
