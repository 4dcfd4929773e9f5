use std::f64::consts::PI;

use nalgebra::DVector;
use serde::Serialize;

use super::gradient::minimal_upper_gradient;
use crate::error::{Error, Result};
use crate::grid::TimeGrid;
use crate::integral::local_integral;
use crate::norm::Exponent;
use crate::section::{lp_direct_norm, Section};

/// Backward difference quotient of a section.
#[derive(Clone, Debug)]
pub struct QuotientSection {
    pub section: Section,
    /// Nodes whose value was copied from the first computable node.
    pub filled: Vec<bool>,
}

/// `(u(t_i) - P(t_{i-h}, t_i) u(t_{i-h})) / (t_i - t_{i-h})` for `i ≥ h`.
///
/// The first `h` nodes have no backward neighbour; they receive the value at
/// node `h` when their space has the same dimension, zero otherwise, and are
/// marked in `filled`.
pub fn difference_quotient(u: &Section, h_cells: usize) -> Result<QuotientSection> {
    let n = u.len();
    if h_cells == 0 || h_cells >= n {
        return Err(Error::param(format!(
            "quotient step {h_cells} must be in 1..{n}"
        )));
    }
    let family = u.family();
    let grid = u.grid();
    let mut values: Vec<DVector<f64>> = Vec::with_capacity(n);
    for i in 0..n {
        if i < h_cells {
            values.push(DVector::zeros(family.dim(i)));
            continue;
        }
        let j = i - h_cells;
        let pushed = family.push(j, i, u.value(j));
        values.push((u.value(i) - pushed) / (grid.node(i) - grid.node(j)));
    }
    let first = values[h_cells].clone();
    let mut filled = vec![false; n];
    for i in 0..h_cells {
        if family.dim(i) == first.len() {
            values[i] = first.clone();
            family.node(i).project_to_active(&mut values[i]);
        }
        filled[i] = true;
    }
    Ok(QuotientSection {
        section: Section::new(family.clone(), values)?,
        filled,
    })
}

/// The one-cell backward quotient, used as the discrete weak derivative.
pub fn weak_derivative(u: &Section) -> Result<Section> {
    Ok(difference_quotient(u, 1)?.section)
}

/// Smooth compactly supported test function `½(1 + cos(2π(t - c)/w))` on
/// `|t - c| < w/2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
}

impl Bump {
    pub fn eval(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width;
        if x.abs() < 0.5 {
            0.5 * (1.0 + (2.0 * PI * x).cos())
        } else {
            0.0
        }
    }
}

pub const BUMP_COUNT: usize = 10;

/// Ten bumps spread evenly over the node range, each supported well inside it.
pub fn standard_bumps(grid: &TimeGrid) -> Vec<Bump> {
    let first = grid.node(0);
    let last = grid.node(grid.len() - 1);
    let span = last - first;
    (0..BUMP_COUNT)
        .map(|j| {
            let center = first + (j as f64 + 1.0) / (BUMP_COUNT as f64 + 1.0) * span;
            let room = (span / 6.0)
                .min(2.0 * (center - first))
                .min(2.0 * (last - center));
            Bump {
                center,
                width: 0.9 * room,
            }
        })
        .collect()
}

/// Residual of discrete integration by parts against the standard bumps.
#[derive(Clone, Debug, Serialize)]
pub struct PartsResidual {
    /// `‖∫ φ' u + ∫ φ u'‖_{t*}` per bump, `t*` two nodes past the bump's support.
    pub per_bump: Vec<f64>,
    pub worst: f64,
}

/// Integration by parts against each bump, with `φ'` taken as the centred
/// difference of the sampled bump so that constants integrate to zero exactly.
pub fn integration_by_parts_residual(u: &Section, du: &Section) -> Result<PartsResidual> {
    let grid = u.grid();
    let n = grid.len();
    if n < 3 {
        return Err(Error::param("integration by parts needs at least 3 nodes"));
    }
    let mut per_bump = Vec::with_capacity(BUMP_COUNT);
    for bump in standard_bumps(grid) {
        let phi: Vec<f64> = grid.nodes().iter().map(|&t| bump.eval(t)).collect();
        let dphi: Vec<f64> = (0..n)
            .map(|i| {
                if i == 0 || i == n - 1 {
                    0.0
                } else {
                    (phi[i + 1] - phi[i - 1]) / (grid.node(i + 1) - grid.node(i - 1))
                }
            })
            .collect();
        let end = match phi.iter().rposition(|&v| v > 0.0) {
            Some(k) => (k + 2).min(n - 1),
            None => {
                per_bump.push(0.0);
                continue;
            }
        };
        let a = u.map_nodes(|i, v| v * dphi[i])?;
        let b = du.map_nodes(|i, v| v * phi[i])?;
        let (_, ia) = local_integral(&a, 0..=end)?;
        let (_, ib) = local_integral(&b, 0..=end)?;
        per_bump.push(u.family().node(end).norm_unchecked((ia + ib).as_slice()));
    }
    let worst = per_bump.iter().copied().fold(0.0, f64::max);
    Ok(PartsResidual { per_bump, worst })
}

/// Section rebuilt from its initial value and the integral of its derivative.
#[derive(Clone, Debug)]
pub struct Reconstruction {
    pub section: Section,
    /// `‖ũ(t_i) - u(t_i)‖_{t_i}`; zero before `from`.
    pub node_errors: Vec<f64>,
    pub max_error: f64,
}

/// `ũ(t_i) = P(t_from, t_i) u(t_from) + ∫_{t_from}^{t_i} u'` for `i ≥ from`.
/// Nodes before `from` keep their original values.
pub fn ftc_reconstruct(u: &Section, from: usize) -> Result<Reconstruction> {
    let n = u.len();
    u.grid().check_index(from)?;
    let family = u.family();
    let du = weak_derivative(u)?;
    let grid = u.grid();
    let mut values: Vec<DVector<f64>> = u.values()[..=from].to_vec();
    if family.explicit_transitions().is_empty() {
        // Trapezoid steps: ũ_{i+1} = P(ũ_i + Δt/2 d_i) + Δt/2 d_{i+1}.
        let mut cur = u.value(from).clone();
        for i in from..n - 1 {
            let half = 0.5 * grid.cell_width(i);
            let mut next = family.step(i, &(&cur + du.value(i) * half));
            next.axpy(half, du.value(i + 1), 1.0);
            values.push(next.clone());
            cur = next;
        }
    } else {
        for i in from + 1..n {
            let (_, integral) = local_integral(&du, from..=i)?;
            values.push(family.push(from, i, u.value(from)) + integral);
        }
    }
    let section = Section::new(family.clone(), values)?;
    let node_errors: Vec<f64> = (0..n)
        .map(|i| {
            family
                .node(i)
                .norm_unchecked((section.value(i) - u.value(i)).as_slice())
        })
        .collect();
    let max_error = node_errors.iter().copied().fold(0.0, f64::max);
    Ok(Reconstruction {
        section,
        node_errors,
        max_error,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SobolevNorm {
    pub lp_part: f64,
    pub gradient_part: f64,
    pub total: f64,
    /// Direct `L^p` norm of the weak derivative.
    pub derivative_norm: f64,
    /// `|gradient_part - derivative_norm| / gradient_part`, zero if both vanish.
    pub relative_gap: f64,
}

pub fn sobolev_norm(u: &Section, p: Exponent) -> Result<SobolevNorm> {
    let lp_part = lp_direct_norm(u, p).value;
    let gradient_part = minimal_upper_gradient(u, p).lp_norm;
    let derivative_norm = if u.len() > 1 {
        lp_direct_norm(&weak_derivative(u)?, p).value
    } else {
        0.0
    };
    let diff = (gradient_part - derivative_norm).abs();
    let relative_gap = if diff == 0.0 {
        0.0
    } else {
        diff / gradient_part.max(derivative_norm)
    };
    Ok(SobolevNorm {
        lp_part,
        gradient_part,
        total: lp_part + gradient_part,
        derivative_norm,
        relative_gap,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::builders::{nested_lq, sup_counterexample, LengthProfile};
    use crate::family::MonotoneFamily;
    use crate::section::section_from_function;

    fn nested(n: usize, mesh: usize) -> Arc<MonotoneFamily> {
        let g = TimeGrid::uniform(0.0, 1.0, n).unwrap();
        let profile = LengthProfile::Affine {
            at_zero: 1.0,
            slope: -0.5,
        };
        Arc::new(nested_lq(&profile, Exponent::TWO, mesh, g).unwrap())
    }

    #[test]
    fn constant_section_has_zero_derivative() {
        let fam = nested(64, 32);
        let v = DVector::from_fn(32, |k, _| (k as f64).cos());
        let u = Section::constant(fam, &v).unwrap();
        let du = weak_derivative(&u).unwrap();
        assert!(du.values().iter().all(|d| d.amax() == 0.0));
        let r = integration_by_parts_residual(&u, &du).unwrap();
        assert!(r.worst <= 1e-12, "{}", r.worst);
        let rec = ftc_reconstruct(&u, 0).unwrap();
        assert!(rec.max_error <= 1e-12);
    }

    #[test]
    fn linear_in_time_quotient() {
        let fam = nested(128, 64);
        let u = section_from_function(fam.clone(), |t, x| t * x);
        let q = difference_quotient(&u, 1).unwrap();
        assert!(q.filled[0] && !q.filled[1]);
        let target = section_from_function(fam, |_, x| x);
        // Away from cells that leave the domain, the quotient is exact.
        let err = q.section.sub(&target).unwrap();
        let rel = lp_direct_norm(&err, Exponent::TWO).value / lp_direct_norm(&target, Exponent::TWO).value;
        assert!(rel < 5e-2, "{rel}");
    }

    #[test]
    fn quotient_step_validated() {
        let fam = nested(8, 4);
        let u = Section::zero(fam);
        assert!(difference_quotient(&u, 0).is_err());
        assert!(difference_quotient(&u, 8).is_err());
    }

    #[test]
    fn smooth_derivative_matches_analytic() {
        let fam = nested(512, 128);
        let u = section_from_function(fam.clone(), |t, x| x.sin() * (-t).exp());
        let du = weak_derivative(&u).unwrap();
        let exact = section_from_function(fam, |t, x| -x.sin() * (-t).exp());
        let rel = lp_direct_norm(&du.sub(&exact).unwrap(), Exponent::TWO).value
            / lp_direct_norm(&exact, Exponent::TWO).value;
        assert!(rel <= 2e-2, "{rel}");
        let parts = integration_by_parts_residual(&u, &du).unwrap();
        assert!(parts.worst < 1e-2, "{}", parts.worst);
    }

    #[test]
    fn bumps_stay_inside_the_grid() {
        let g = TimeGrid::uniform(0.0, 1.0, 100).unwrap();
        for b in standard_bumps(&g) {
            assert!(b.center - b.width / 2.0 > g.node(0));
            assert!(b.center + b.width / 2.0 < g.node(99));
            assert_eq!(b.eval(b.center), 1.0);
        }
    }

    #[test]
    fn counterexample_has_zero_derivative_and_norm_split() {
        let g = TimeGrid::uniform(0.0, 1.0, 32).unwrap();
        let fam = Arc::new(sup_counterexample(16, g).unwrap());
        let u = section_from_function(fam, |_, s| s);
        let du = weak_derivative(&u).unwrap();
        assert!(du.values().iter().all(|d| d.amax() == 0.0));
        let norm = sobolev_norm(&u, Exponent::TWO).unwrap();
        assert_eq!(norm.gradient_part, 0.0);
        assert_eq!(norm.total, norm.lp_part);
        let rec = ftc_reconstruct(&u, 0).unwrap();
        for i in 0..32 {
            assert_eq!(rec.section.value(i), u.value(i));
        }
    }

    #[test]
    fn gradient_and_derivative_norms_agree() {
        let fam = nested(512, 64);
        let u = section_from_function(fam, |t, x| x.sin() * (-t).exp());
        let norm = sobolev_norm(&u, Exponent::TWO).unwrap();
        assert!(norm.relative_gap <= 2e-2, "{}", norm.relative_gap);
        assert!((norm.total - norm.lp_part - norm.gradient_part).abs() < 1e-15);
    }

    #[test]
    fn reconstruction_error_halves() {
        let err = |n| {
            let fam = nested(n, 64);
            let u = section_from_function(fam, |t, x| x.sin() * (-t).exp());
            ftc_reconstruct(&u, 0).unwrap().max_error
        };
        let (e1, e2) = (err(64), err(128));
        let order = (e1 / e2).log2();
        assert!((0.7..1.3).contains(&order), "{order}");
    }
}
