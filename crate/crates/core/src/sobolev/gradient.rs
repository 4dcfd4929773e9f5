use std::fmt::Write as _;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::norm::Exponent;
use crate::report::{VerificationReport, Witness};
use crate::section::Section;

/// Piecewise-constant nonnegative function on the grid cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct UpperGradient {
    pub cell_values: Vec<f64>,
    pub p: Exponent,
    pub lp_norm: f64,
}

impl UpperGradient {
    pub fn new(grid: &TimeGrid, cell_values: Vec<f64>, p: Exponent) -> Result<Self> {
        if cell_values.len() != grid.cell_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.cell_count(),
                found: cell_values.len(),
            });
        }
        if let Some(k) = cell_values.iter().position(|g| !(*g >= 0.0)) {
            return Err(Error::param(format!(
                "gradient value {} on cell {k} is negative or NaN",
                cell_values[k]
            )));
        }
        let lp_norm = cell_lp_norm(grid, &cell_values, p);
        Ok(Self {
            cell_values,
            p,
            lp_norm,
        })
    }

    pub fn zero(grid: &TimeGrid, p: Exponent) -> Self {
        Self {
            cell_values: vec![0.0; grid.cell_count()],
            p,
            lp_norm: 0.0,
        }
    }

    /// `∫_{t_s}^{t_t} g`.
    pub fn integral(&self, grid: &TimeGrid, s: usize, t: usize) -> f64 {
        (s..t).map(|k| grid.cell_width(k) * self.cell_values[k]).sum()
    }

    /// Rows `cell,t_left,t_right,g`.
    pub fn to_csv(&self, grid: &TimeGrid) -> String {
        let mut out = String::from("cell,t_left,t_right,g\n");
        for (k, g) in self.cell_values.iter().enumerate() {
            writeln!(out, "{k},{},{},{g}", grid.node(k), grid.node(k + 1)).expect("string write");
        }
        out
    }
}

/// Exact `L^p` norm of a function that is constant on each cell.
pub fn cell_lp_norm(grid: &TimeGrid, values: &[f64], p: Exponent) -> f64 {
    if p.is_infinite() {
        values.iter().copied().fold(0.0, f64::max)
    } else {
        p.weighted_norm(&grid.cell_widths(), values)
    }
}

/// `g_k = ‖u(t_{k+1}) - P(t_k, t_{k+1}) u(t_k)‖_{t_{k+1}} / Δt_k`.
///
/// Any upper gradient must dominate this cell by cell, and it already satisfies
/// the upper-gradient inequality for every pair of nodes, so it is the minimal
/// one in every `L^p`.
pub fn minimal_upper_gradient(u: &Section, p: Exponent) -> UpperGradient {
    let grid = u.grid();
    let cells = (0..grid.cell_count())
        .map(|k| u.increment(k, k + 1) / grid.cell_width(k))
        .collect();
    UpperGradient::new(grid, cells, p).expect("increments are nonnegative")
}

/// `table[s][t - s - 1] = ‖u(t_t) - P(t_s, t_t) u(t_s)‖_{t_t}` for all `s < t`.
pub fn pair_increments(u: &Section) -> Vec<Vec<f64>> {
    let family = u.family();
    let n = u.len();
    let explicit = !family.explicit_transitions().is_empty();
    (0..n)
        .into_par_iter()
        .map(|s| {
            let mut row = Vec::with_capacity(n - s - 1);
            let mut pushed = u.value(s).clone();
            for t in s + 1..n {
                pushed = if explicit {
                    family.push(s, t, u.value(s))
                } else {
                    family.step(t - 1, &pushed)
                };
                let diff = u.value(t) - &pushed;
                row.push(family.node(t).norm_unchecked(diff.as_slice()));
            }
            row
        })
        .collect()
}

/// Largest `lhs - rhs` over a triangular pair table, with the pair attaining it.
pub(crate) fn worst_pair(
    n: usize,
    mut excess: impl FnMut(usize, usize) -> f64,
) -> (f64, Option<(usize, usize)>) {
    let mut worst = (0.0, None);
    for s in 0..n {
        for t in s + 1..n {
            let e = excess(s, t);
            if e > worst.0 {
                worst = (e, Some((s, t)));
            }
        }
    }
    worst
}

/// Checks `‖u(t) - P(s,t) u(s)‖_t ≤ ∫_s^t g` for every node pair `s < t`.
pub fn verify_upper_gradient(
    u: &Section,
    g: &UpperGradient,
    tolerance: f64,
) -> Result<VerificationReport> {
    let grid = u.grid();
    if g.cell_values.len() != grid.cell_count() {
        return Err(Error::DimensionMismatch {
            expected: grid.cell_count(),
            found: g.cell_values.len(),
        });
    }
    let table = pair_increments(u);
    let prefix = prefix_integrals(grid, &g.cell_values);
    let (worst, pair) = worst_pair(u.len(), |s, t| table[s][t - s - 1] - (prefix[t] - prefix[s]));
    let witness = pair.map(|(s, t)| {
        Witness::new(
            vec![s, t],
            format!("increment exceeds the gradient integral by {worst:.3e}"),
        )
    });
    Ok(
        VerificationReport::from_residual("upper_gradient", worst, tolerance, witness)
            .metric("gradient_lp_norm", g.lp_norm),
    )
}

/// `prefix[i] = ∫_{t_0}^{t_i} g` for a cell function `g`.
pub(crate) fn prefix_integrals(grid: &TimeGrid, cells: &[f64]) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(cells.len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for (k, g) in cells.iter().enumerate() {
        acc += grid.cell_width(k) * g;
        prefix.push(acc);
    }
    prefix
}

/// `s,t,increment,gradient_integral,excess` for every node pair.
pub fn pair_residuals_csv(u: &Section, g: &UpperGradient) -> String {
    let table = pair_increments(u);
    let prefix = prefix_integrals(u.grid(), &g.cell_values);
    let mut out = String::from("s,t,increment,gradient_integral,excess\n");
    for (s, row) in table.iter().enumerate() {
        for (off, inc) in row.iter().enumerate() {
            let t = s + off + 1;
            let rhs = prefix[t] - prefix[s];
            writeln!(out, "{s},{t},{inc},{rhs},{}", inc - rhs).expect("string write");
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DVector;

    use super::*;
    use crate::builders::{nested_lq, sup_counterexample, LengthProfile};
    use crate::family::MonotoneFamily;
    use crate::section::section_from_function;

    fn nested(n: usize) -> Arc<MonotoneFamily> {
        let g = TimeGrid::uniform(0.0, 1.0, n).unwrap();
        let profile = LengthProfile::Affine {
            at_zero: 1.0,
            slope: -0.5,
        };
        Arc::new(nested_lq(&profile, Exponent::TWO, 32, g).unwrap())
    }

    #[test]
    fn constant_section_has_zero_gradient() {
        let fam = nested(20);
        let u = Section::constant(fam.clone(), &DVector::from_element(32, 2.0)).unwrap();
        let g = minimal_upper_gradient(&u, Exponent::TWO);
        assert_eq!(g.lp_norm, 0.0);
        let zero = UpperGradient::zero(fam.grid(), Exponent::TWO);
        let r = verify_upper_gradient(&u, &zero, 1e-12).unwrap();
        assert!(r.passed());
        assert_eq!(r.worst_residual, 0.0);
    }

    #[test]
    fn counterexample_gradient_vanishes() {
        let g = TimeGrid::uniform(0.0, 1.0, 64).unwrap();
        let fam = Arc::new(sup_counterexample(32, g).unwrap());
        let u = section_from_function(fam.clone(), |_, s| s);
        let grad = minimal_upper_gradient(&u, Exponent::TWO);
        assert_eq!(grad.lp_norm, 0.0);
        let zero = UpperGradient::zero(fam.grid(), Exponent::TWO);
        assert!(verify_upper_gradient(&u, &zero, 1e-12).unwrap().passed());
    }

    #[test]
    fn halved_gradient_fails_with_witness() {
        let fam = nested(32);
        let u = section_from_function(fam.clone(), |t, x| x.sin() * (-t).exp());
        let g = minimal_upper_gradient(&u, Exponent::TWO);
        let ok = verify_upper_gradient(&u, &g, 1e-12).unwrap();
        assert!(ok.passed(), "{}", ok.worst_residual);
        let half = UpperGradient::new(
            fam.grid(),
            g.cell_values.iter().map(|x| 0.5 * x).collect(),
            Exponent::TWO,
        )
        .unwrap();
        let bad = verify_upper_gradient(&u, &half, 1e-12).unwrap();
        assert!(!bad.passed());
        assert!(bad.worst_residual > 0.0);
        assert_eq!(bad.witness.unwrap().indices.len(), 2);
    }

    #[test]
    fn negative_cells_rejected() {
        let g = TimeGrid::uniform(0.0, 1.0, 3).unwrap();
        assert!(UpperGradient::new(&g, vec![1.0, -1.0], Exponent::ONE).is_err());
        assert!(UpperGradient::new(&g, vec![1.0], Exponent::ONE).is_err());
    }

    #[test]
    fn cell_norm_matches_hand_computation() {
        let g = TimeGrid::new(0.0, 1.0, vec![0.1, 0.3, 0.9]).unwrap();
        let ug = UpperGradient::new(&g, vec![1.0, 2.0], Exponent::TWO).unwrap();
        assert!((ug.lp_norm - (0.2f64 + 0.6 * 4.0).sqrt()).abs() < 1e-15);
        let ug = UpperGradient::new(&g, vec![1.0, 2.0], Exponent::INFINITY).unwrap();
        assert_eq!(ug.lp_norm, 2.0);
        assert!(ug.to_csv(&g).lines().count() == 3);
    }
}
