//! Brute-force minimal gradient: minimise the `L^p` norm of a nonnegative cell
//! function subject to the upper-gradient inequality on every node pair.
//! Only meant for cross-checking [`super::minimal_upper_gradient`].

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use super::gradient::{pair_increments, UpperGradient};
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::norm::Exponent;
use crate::section::Section;

pub const ORACLE_MAX_NODES: usize = 16;

/// One constraint `Σ_{k ∈ cells} Δt_k g_k ≥ rhs`.
struct PairConstraint {
    cells: std::ops::Range<usize>,
    rhs: f64,
}

pub fn minimal_gradient_oracle(u: &Section, p: Exponent) -> Result<UpperGradient> {
    let n = u.len();
    if n > ORACLE_MAX_NODES {
        return Err(Error::TooLarge {
            n,
            max: ORACLE_MAX_NODES,
        });
    }
    let grid = u.grid();
    if n < 2 {
        return Ok(UpperGradient::zero(grid, p));
    }
    let table = pair_increments(u);
    let mut constraints = Vec::new();
    for (s, row) in table.iter().enumerate() {
        for (off, &rhs) in row.iter().enumerate() {
            if rhs > 0.0 {
                constraints.push(PairConstraint {
                    cells: s..s + off + 1,
                    rhs,
                });
            }
        }
    }
    let cells = if constraints.is_empty() {
        vec![0.0; grid.cell_count()]
    } else if p.value() == 1.0 || p.is_infinite() {
        solve_linear(grid, &constraints, p.is_infinite())?
    } else {
        solve_dual_ascent(grid, &constraints, p.value())?
    };
    // Clip round-off below zero.
    let cells = cells.into_iter().map(|g| g.max(0.0)).collect();
    UpperGradient::new(grid, cells, p)
}

fn solve_linear(grid: &TimeGrid, constraints: &[PairConstraint], sup: bool) -> Result<Vec<f64>> {
    let m = grid.cell_count();
    let widths = grid.cell_widths();
    let mut lp = Problem::new(OptimizationDirection::Minimize);
    let g: Vec<_> = (0..m)
        .map(|k| lp.add_var(if sup { 0.0 } else { widths[k] }, (0.0, f64::INFINITY)))
        .collect();
    if sup {
        let z = lp.add_var(1.0, (0.0, f64::INFINITY));
        for &gk in &g {
            lp.add_constraint([(gk, 1.0), (z, -1.0)], ComparisonOp::Le, 0.0);
        }
    }
    for c in constraints {
        let expr: Vec<_> = c.cells.clone().map(|k| (g[k], widths[k])).collect();
        lp.add_constraint(expr, ComparisonOp::Ge, c.rhs);
    }
    let solution = lp
        .solve()
        .map_err(|e| Error::Solver(format!("linear program failed: {e}")))?;
    Ok(g.iter().map(|&v| *solution.var_value(v)).collect())
}

/// Coordinate ascent on the Lagrange multipliers. Stationarity gives
/// `g_k = (Λ_k / p)^{1/(p-1)}` with `Λ_k` the sum of multipliers of the
/// constraints covering cell `k`; each multiplier is then solved exactly.
fn solve_dual_ascent(grid: &TimeGrid, constraints: &[PairConstraint], p: f64) -> Result<Vec<f64>> {
    let m = grid.cell_count();
    let widths = grid.cell_widths();
    let expo = 1.0 / (p - 1.0);
    let primal = |big_lambda: f64| (big_lambda.max(0.0) / p).powf(expo);
    let scale = constraints.iter().map(|c| c.rhs).fold(0.0, f64::max);
    let tol = 1e-14 * scale;

    let mut lambda = vec![0.0; constraints.len()];
    let mut big = vec![0.0; m];
    for sweep in 0..200_000 {
        for (ci, c) in constraints.iter().enumerate() {
            let old = lambda[ci];
            let slack = |l: f64| -> f64 {
                c.cells
                    .clone()
                    .map(|k| widths[k] * primal(big[k] - old + l))
                    .sum::<f64>()
                    - c.rhs
            };
            let new = if slack(0.0) >= 0.0 {
                0.0
            } else {
                let mut hi = old.max(f64::MIN_POSITIVE);
                while slack(hi) < 0.0 {
                    hi *= 2.0;
                }
                let mut lo = 0.0;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if slack(mid) < 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                hi
            };
            if new != old {
                for k in c.cells.clone() {
                    big[k] += new - old;
                }
                lambda[ci] = new;
            }
        }
        if sweep % 16 == 15 {
            let g: Vec<f64> = big.iter().map(|&b| primal(b)).collect();
            let kkt = constraints
                .iter()
                .zip(&lambda)
                .map(|(c, &l)| {
                    let lhs: f64 = c.cells.clone().map(|k| widths[k] * g[k]).sum();
                    let gap = lhs - c.rhs;
                    let infeasible = (-gap).max(0.0);
                    let complementary = if l > 0.0 { gap.abs() } else { 0.0 };
                    infeasible.max(complementary)
                })
                .fold(0.0, f64::max);
            if kkt <= tol {
                return Ok(g);
            }
        }
    }
    Err(Error::Solver(
        "dual coordinate ascent did not reach the stationarity tolerance".into(),
    ))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::family::{MonotoneFamily, Transition};
    use crate::norm::NormedNode;
    use crate::sobolev::minimal_upper_gradient;

    fn random_instance(rng: &mut ChaCha8Rng, n: usize) -> Section {
        let grid = TimeGrid::new(
            0.0,
            1.0,
            {
                let mut t: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.99)).collect();
                t.sort_by(f64::total_cmp);
                t.dedup();
                t
            },
        )
        .unwrap();
        let dim = 4;
        let nodes: Vec<NormedNode> = (0..grid.len())
            .map(|i| {
                let w = vec![1.0 / (1.0 + i as f64); dim];
                NormedNode::weighted_lq(Exponent::ONE, w, vec![true; dim]).unwrap()
            })
            .collect();
        let adjacent = vec![Transition::Identity; grid.len() - 1];
        let fam = Arc::new(MonotoneFamily::new("r", grid, nodes, adjacent).unwrap());
        let values = (0..fam.len())
            .map(|_| DVector::from_fn(dim, |_, _| rng.gen_range(-1.0..1.0)))
            .collect();
        Section::new(fam, values).unwrap()
    }

    #[test]
    fn matches_closed_form_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let n = rng.gen_range(2..=8);
            let u = random_instance(&mut rng, n);
            for p in [Exponent::ONE, Exponent::TWO, Exponent::new(3.0).unwrap(), Exponent::INFINITY] {
                let oracle = minimal_gradient_oracle(&u, p).unwrap();
                let closed = minimal_upper_gradient(&u, p);
                assert!(
                    (oracle.lp_norm - closed.lp_norm).abs() <= 1e-9,
                    "p={p}: {} vs {}",
                    oracle.lp_norm,
                    closed.lp_norm
                );
            }
        }
    }

    #[test]
    fn oracle_is_below_any_feasible_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = random_instance(&mut rng, 6);
        let closed = minimal_upper_gradient(&u, Exponent::TWO);
        let bumped = UpperGradient::new(
            u.grid(),
            closed.cell_values.iter().map(|g| g + 0.3).collect(),
            Exponent::TWO,
        )
        .unwrap();
        let oracle = minimal_gradient_oracle(&u, Exponent::TWO).unwrap();
        assert!(oracle.lp_norm <= bumped.lp_norm);
    }

    #[test]
    fn large_grids_are_refused() {
        let grid = TimeGrid::uniform(0.0, 1.0, 17).unwrap();
        let fam = Arc::new(MonotoneFamily::constant("c", grid, NormedNode::euclidean(1)));
        let u = Section::zero(fam);
        assert!(matches!(
            minimal_gradient_oracle(&u, Exponent::TWO),
            Err(Error::TooLarge { n: 17, .. })
        ));
    }

    #[test]
    fn constant_section_gives_zero() {
        let grid = TimeGrid::uniform(0.0, 1.0, 5).unwrap();
        let fam = Arc::new(MonotoneFamily::constant("c", grid, NormedNode::euclidean(2)));
        let u = Section::constant(fam, &DVector::from_vec(vec![1.0, 2.0])).unwrap();
        for p in [Exponent::ONE, Exponent::TWO, Exponent::INFINITY] {
            assert_eq!(minimal_gradient_oracle(&u, p).unwrap().lp_norm, 0.0);
        }
    }
}
