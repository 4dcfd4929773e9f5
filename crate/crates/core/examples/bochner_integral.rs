//! Local integrals, the Bochner inequality, simple approximations and the
//! averaging operator on a shrinking L² family.

use monofam::harness::fixtures::{shrinking_l2, smooth_section};
use monofam::integral::{bochner_terms, local_integral, smooth_mh, ApproximateBySimple};
use monofam::section::lp_direct_norm;
use monofam::{Exponent, Result};

fn main() -> Result<()> {
    let u = smooth_section(shrinking_l2(128, 64)?);
    let (landing, integral) = local_integral(&u, 10..=90)?;
    println!(
        "integral over nodes 10..=90 lands at node {landing}, norm {:.6}",
        u.family().eval_norm(landing, &integral)?
    );
    let terms = bochner_terms(&u, 10..=90)?;
    println!(
        "‖∫u‖ = {:.6} <= Σ‖Pu‖ = {:.6} <= Σ‖u‖ = {:.6}",
        terms.integral_norm, terms.pushed_sum, terms.direct_sum
    );

    for tol in [1e-1, 1e-2, 1e-3] {
        let approx = u.approximate_by_simple(0..=127, tol)?;
        println!(
            "simple approximation, tol {tol:e}: {} pieces, residual {:.2e}, norm ratio {:.2}",
            approx.simple.pieces().len(),
            approx.residual,
            approx.max_ratio
        );
    }

    for cells in [16, 4, 1] {
        let h = cells as f64 / 128.0;
        let err = lp_direct_norm(&smooth_mh(&u, h)?.sub(&u)?, Exponent::TWO).value;
        println!("‖M_h u - u‖ with h = {h:.4}: {err:.3e}");
    }
    Ok(())
}
