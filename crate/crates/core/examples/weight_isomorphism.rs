//! Compatibility constants of `Φ_t = w(t)·id` on a constant `L²` family for a
//! Lipschitz weight and a step weight, and the lifted-section bound for the
//! Lipschitz one.

use monofam::harness::fixtures::{constant_l2, smooth_section};
use monofam::isomorphism::{estimate_m, lift_bound_check, FamilyIsomorphism, NamedWeight, ReferenceNode, WeightProfile};
use monofam::{Exponent, Result};

fn main() -> Result<()> {
    for weight in [NamedWeight::Affine, NamedWeight::Step] {
        for n in [64, 128, 256] {
            let family = constant_l2(n, 16)?;
            let w = WeightProfile::Named(weight).values(family.grid())?;
            let iso = FamilyIsomorphism::weight(&family, &w, ReferenceNode::Last, 1)?;
            let report = estimate_m(&family, &iso, 1)?;
            println!(
                "{weight:?} n = {n}: M_forward {:.4}, M_inverse {:.4}, sup C {:.3}, sup c {:.3}, exact {}",
                report.m_forward, report.m_inverse, report.sup_forward, report.sup_inverse, report.exact
            );
        }
    }
    let family = constant_l2(256, 16)?;
    let w = WeightProfile::Named(NamedWeight::Affine).values(family.grid())?;
    let iso = FamilyIsomorphism::weight(&family, &w, ReferenceNode::Last, 1)?;
    let report = estimate_m(&family, &iso, 1)?;
    let check = lift_bound_check(&iso, &smooth_section(family), &report, Exponent::TWO, 1e-9)?;
    println!(
        "lifted gradient {:.6} <= bound {:.6}: {}",
        check.metrics["lifted_gradient"], check.metrics["bound"], check.status
    );
    Ok(())
}
