//! Checks relating a section to the scalar function `t ↦ ‖u(t)‖_t`.

use nalgebra::DVector;
use rayon::prelude::*;

use super::derivative::sobolev_norm;
use super::gradient::{cell_lp_norm, minimal_upper_gradient, pair_increments, prefix_integrals, worst_pair};
use crate::error::{Error, Result};
use crate::norm::Exponent;
use crate::report::{Status, VerificationReport, Witness};
use crate::section::Section;

/// Per cell `k`, the largest `|‖P(s,k+1) u(s)‖ - ‖P(s,k) u(s)‖| / Δt_k` over
/// `s ≤ k`, together with the `s` attaining it. This is the smallest cell
/// majorant for the norm variation along frozen vectors.
pub fn frozen_norm_variation(u: &Section) -> (Vec<f64>, Vec<usize>) {
    let family = u.family();
    let grid = u.grid();
    let n = u.len();
    let orbits: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| {
            family
                .orbit(s, u.value(s))
                .iter()
                .enumerate()
                .map(|(off, x)| family.node(s + off).norm_unchecked(x.as_slice()))
                .collect()
        })
        .collect();
    let mut best = vec![0.0; grid.cell_count()];
    let mut arg: Vec<usize> = (0..grid.cell_count()).collect();
    for (s, norms) in orbits.iter().enumerate() {
        for k in s..n - 1 {
            let q = (norms[k + 1 - s] - norms[k - s]).abs() / grid.cell_width(k);
            if q > best[k] {
                best[k] = q;
                arg[k] = s;
            }
        }
    }
    (best, arg)
}

/// Norm-regularity check for `t ↦ ‖u(t)‖_t` given a cell majorant `H` of the
/// norm variation along frozen vectors.
///
/// If `H` fails to dominate the variation on some cell the status is
/// `HypothesisViolated` and the conclusion is not tested. Otherwise every pair
/// is checked against `|‖u(t)‖_t - ‖u(s)‖_s| ≤ ∫_s^t (g + H)` with `g` the
/// minimal upper gradient.
pub fn scalar_characterization_check(
    u: &Section,
    p: Exponent,
    majorant: &[f64],
    tolerance: f64,
) -> Result<VerificationReport> {
    let grid = u.grid();
    let cells = grid.cell_count();
    if majorant.len() != cells {
        return Err(Error::DimensionMismatch {
            expected: cells,
            found: majorant.len(),
        });
    }
    if majorant.iter().any(|h| !(*h >= 0.0)) {
        return Err(Error::param("majorant must be nonnegative"));
    }
    let norms = u.node_norms();
    let max_scalar_quotient = (0..cells)
        .map(|k| (norms[k + 1] - norms[k]).abs() / grid.cell_width(k))
        .fold(0.0, f64::max);
    let (variation, arg) = frozen_norm_variation(u);
    let mut excess = (0.0, 0usize);
    for k in 0..cells {
        let e = variation[k] - majorant[k];
        if e > excess.0 {
            excess = (e, k);
        }
    }
    let majorant_norm = cell_lp_norm(grid, majorant, p);
    if excess.0 > tolerance * (1.0 + majorant[excess.1]) {
        let k = excess.1;
        let witness = Witness::new(
            vec![arg[k], k],
            format!(
                "norm of the vector frozen at node {} moves at rate {:.3e} on cell {k}, majorant {:.3e}",
                arg[k], variation[k], majorant[k]
            ),
        );
        return Ok(VerificationReport::with_status(
            "scalar_characterization",
            Status::HypothesisViolated,
            excess.0,
            tolerance,
            Some(witness),
        )
        .metric("max_scalar_quotient", max_scalar_quotient)
        .metric("majorant_lp_norm", majorant_norm)
        .metric("required_majorant", variation[k]));
    }

    let g = minimal_upper_gradient(u, p);
    let combined: Vec<f64> = g.cell_values.iter().zip(majorant).map(|(a, b)| a + b).collect();
    let prefix = prefix_integrals(grid, &combined);
    let (worst, pair) =
        worst_pair(u.len(), |s, t| (norms[t] - norms[s]).abs() - (prefix[t] - prefix[s]));
    let witness = pair.map(|(s, t)| Witness::new(vec![s, t], "norm change exceeds ∫(g + H)"));
    let sob = sobolev_norm(u, p)?;
    let sup = norms.iter().copied().fold(0.0, f64::max);
    let denom = sob.total + majorant_norm;
    Ok(
        VerificationReport::from_residual("scalar_characterization", worst, tolerance, witness)
            .metric("max_scalar_quotient", max_scalar_quotient)
            .metric("majorant_lp_norm", majorant_norm)
            .metric("sup_over_sobolev", if denom > 0.0 { sup / denom } else { 0.0 }),
    )
}

/// Minimum number of cells before a single cell carrying a large share of a
/// probe's variation counts as a discrete jump.
const JUMP_MIN_CELLS: usize = 20;
const JUMP_SHARE: f64 = 0.1;

/// Sufficiency check driven by probe distances `ψ_v(t) = ‖u(t) - P(t_0,t) v‖_t`.
///
/// The cell majorant `ψ'` is the largest probe slope on each cell; every pair
/// is checked against `‖u(t) - P(s,t) u(s)‖_t ≤ ∫_s^t ψ'`. A probe whose
/// variation concentrates in one cell (a share of at least 10% once the grid
/// has 20 or more cells) marks the hypothesis as violated.
pub fn reshetnyak_check(
    u: &Section,
    p: Exponent,
    probes: &[DVector<f64>],
    tolerance: f64,
) -> Result<VerificationReport> {
    let family = u.family();
    let grid = u.grid();
    let cells = grid.cell_count();
    for v in probes {
        if v.len() != family.dim(0) {
            return Err(Error::DimensionMismatch {
                expected: family.dim(0),
                found: v.len(),
            });
        }
    }
    let psi: Vec<Vec<f64>> = probes
        .par_iter()
        .map(|v| {
            family
                .orbit(0, v)
                .iter()
                .enumerate()
                .map(|(i, pv)| family.node(i).norm_unchecked((u.value(i) - pv).as_slice()))
                .collect()
        })
        .collect();
    let mut slope = vec![0.0; cells];
    let mut jump: Option<(usize, usize, f64)> = None;
    for (j, values) in psi.iter().enumerate() {
        let steps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
        for k in 0..cells {
            slope[k] = f64::max(slope[k], steps[k] / grid.cell_width(k));
        }
        let total: f64 = steps.iter().sum();
        let scale = 1.0 + values.iter().copied().fold(0.0, f64::max);
        if cells >= JUMP_MIN_CELLS && total > 1e-12 * scale {
            let (k, top) = steps
                .iter()
                .copied()
                .enumerate()
                .fold((0, 0.0), |acc, (k, s)| if s > acc.1 { (k, s) } else { acc });
            let share = top / total;
            if share >= JUMP_SHARE && jump.map_or(true, |(_, _, best)| share > best) {
                jump = Some((j, k, share));
            }
        }
    }
    let table = pair_increments(u);
    let prefix = prefix_integrals(grid, &slope);
    let (worst, pair) = worst_pair(u.len(), |s, t| table[s][t - s - 1] - (prefix[t] - prefix[s]));
    let slope_norm = cell_lp_norm(grid, &slope, p);
    let max_share = jump.map_or(0.0, |j| j.2);

    let report = match jump {
        Some((j, k, share)) => VerificationReport::with_status(
            "reshetnyak",
            Status::HypothesisViolated,
            worst,
            tolerance,
            Some(Witness::new(
                vec![j, k],
                format!("probe {j} changes by {:.1}% of its variation on cell {k}", 100.0 * share),
            )),
        ),
        None => {
            let witness =
                pair.map(|(s, t)| Witness::new(vec![s, t], "increment exceeds ∫ψ'"));
            VerificationReport::from_residual("reshetnyak", worst, tolerance, witness)
        }
    };
    Ok(report
        .metric("conclusion_residual", worst)
        .metric("probe_slope_lp_norm", slope_norm)
        .metric("max_cell_share", max_share))
}
