//! Builds the four stock families, fuzzes their axioms and prints the edge spaces.

use monofam::harness::fixtures::{builder_family, BUILDER_NAMES};
use monofam::isomorphism::edge_spaces;
use monofam::{check_family, Result};

fn main() -> Result<()> {
    for name in BUILDER_NAMES {
        let family = builder_family(name, 64, 128)?;
        let report = check_family(&family, 50, 42, 1e-12);
        println!(
            "{name:>20}: {} (monotonicity {:.1e}, contraction {:.1e}, semigroup {:.1e})",
            report.status,
            report.metrics["monotonicity"],
            report.metrics["contraction"],
            report.metrics["semigroup"]
        );
        let edges = edge_spaces(&family);
        println!("{:>20}  dims {} -> {}; {}", "", edges.x0.dim(), edges.x_t.dim(), edges.extrapolation_note);
    }
    Ok(())
}
