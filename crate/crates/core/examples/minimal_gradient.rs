//! Closed-form minimal upper gradient against the all-pairs oracle, and the
//! Sobolev norm of a smooth section.

use monofam::harness::fixtures::{random_small_instance, shrinking_l2, smooth_section};
use monofam::sobolev::{minimal_gradient_oracle, minimal_upper_gradient, sobolev_norm, verify_upper_gradient};
use monofam::{Exponent, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let u = random_small_instance(&mut rng, 6, Exponent::TWO)?;
    for p in [Exponent::ONE, Exponent::TWO, Exponent::INFINITY] {
        let closed = minimal_upper_gradient(&u, p);
        let oracle = minimal_gradient_oracle(&u, p)?;
        println!("p = {p}: closed form {:.12}, oracle {:.12}", closed.lp_norm, oracle.lp_norm);
    }

    let u = smooth_section(shrinking_l2(256, 64)?);
    let g = minimal_upper_gradient(&u, Exponent::TWO);
    let check = verify_upper_gradient(&u, &g, 1e-12)?;
    println!("all-pairs check of the minimal gradient: {} ({:.1e})", check.status, check.worst_residual);
    let norm = sobolev_norm(&u, Exponent::TWO)?;
    println!(
        "W^{{1,2}} norm {:.6} = {:.6} + {:.6}; derivative norm {:.6}, relative gap {:.2e}",
        norm.total, norm.lp_part, norm.gradient_part, norm.derivative_norm, norm.relative_gap
    );
    Ok(())
}
