//! Weak derivative, integration-by-parts residual and FTC reconstruction
//! under grid refinement.

use monofam::harness::fixtures::{shrinking_l2, smooth_section};
use monofam::sobolev::{ftc_reconstruct, integration_by_parts_residual, weak_derivative};
use monofam::Result;

fn main() -> Result<()> {
    println!("{:>5} {:>14} {:>14}", "n", "parts residual", "ftc error");
    for n in [64, 128, 256, 512] {
        let u = smooth_section(shrinking_l2(n, 128)?);
        let du = weak_derivative(&u)?;
        let parts = integration_by_parts_residual(&u, &du)?;
        let rec = ftc_reconstruct(&u, 0)?;
        println!("{n:>5} {:>14.3e} {:>14.3e}", parts.worst, rec.max_error);
    }
    Ok(())
}
