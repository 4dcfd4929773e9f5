//! Composition ratios for cusp functions `|x - a|^α` cut off near `a`.
//!
//! Run with `--release`; the reference mesh has 8192 points.

use monofam::isomorphism::composition_blowup_demo;
use monofam::Result;

fn main() -> Result<()> {
    let n = [16, 32, 64, 128, 256];
    for exponent in [2.0 / 3.0, 2.0] {
        let table = composition_blowup_demo(&n, 0.2, 0.201, 0.3, 8192, exponent)?;
        println!("exponent {exponent:.3}, increasing: {}", table.strictly_increasing);
        for (row, growth) in table.rows.iter().zip(std::iter::once(&f64::NAN).chain(&table.growth_factors)) {
            println!("  n = {:>3}: ratio {:>10.4}  growth {:.3}", row.n, row.ratio, growth);
        }
    }
    Ok(())
}
