//! Local Bochner integrals, simple-section approximation and running averages.

use std::ops::RangeInclusive;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::MonotoneFamily;
use crate::section::Section;

fn check_window(family: &MonotoneFamily, window: &RangeInclusive<usize>) -> Result<(usize, usize)> {
    let (a, b) = (*window.start(), *window.end());
    family.grid().check_index(b)?;
    if a > b {
        return Err(Error::param(format!("empty window {a}..={b}")));
    }
    Ok((a, b))
}

/// Trapezoid integral of `u` over the node window, landing in the space of the
/// last window node. Returns that node's index and the vector.
pub fn local_integral(u: &Section, window: RangeInclusive<usize>) -> Result<(usize, DVector<f64>)> {
    let family = u.family();
    let (a, b) = check_window(family, &window)?;
    let w = family.grid().trapezoid_weights(a, b);
    if family.explicit_transitions().is_empty() {
        // Horner form: push the running sum one cell at a time.
        let mut acc = u.value(a) * w[0];
        for i in a + 1..=b {
            acc = family.step(i - 1, &acc);
            acc.axpy(w[i - a], u.value(i), 1.0);
        }
        Ok((b, acc))
    } else {
        let mut acc = DVector::zeros(family.dim(b));
        for i in a..=b {
            acc.axpy(w[i - a], &family.push(i, b, u.value(i)), 1.0);
        }
        Ok((b, acc))
    }
}

/// The three quantities in the Bochner inequality for one window:
/// `‖∫u‖_{t*} ≤ Σ w_i ‖P(t_i,t*) u_i‖_{t*} ≤ Σ w_i ‖u_i‖_{t_i}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BochnerTerms {
    pub integral_norm: f64,
    pub pushed_sum: f64,
    pub direct_sum: f64,
}

impl BochnerTerms {
    /// Largest violation of either inequality, zero when both hold.
    pub fn residual(&self) -> f64 {
        (self.integral_norm - self.pushed_sum)
            .max(self.pushed_sum - self.direct_sum)
            .max(0.0)
    }
}

pub fn bochner_terms(u: &Section, window: RangeInclusive<usize>) -> Result<BochnerTerms> {
    let family = u.family();
    let (a, b) = check_window(family, &window)?;
    let (_, integral) = local_integral(u, window)?;
    let w = family.grid().trapezoid_weights(a, b);
    let target = family.node(b);
    let mut pushed_sum = 0.0;
    let mut direct_sum = 0.0;
    for i in a..=b {
        let pushed = family.push(i, b, u.value(i));
        pushed_sum += w[i - a] * target.norm_unchecked(pushed.as_slice());
        direct_sum += w[i - a] * family.node(i).norm_unchecked(u.value(i).as_slice());
    }
    Ok(BochnerTerms {
        integral_norm: target.norm_unchecked(integral.as_slice()),
        pushed_sum,
        direct_sum,
    })
}

/// One piece `χ_{[start, end]} · P(t_start, ·) v` of a simple section.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub start: usize,
    pub end: usize,
    /// Value at `start`, in that node's space.
    pub vector: DVector<f64>,
}

/// Finite sum of indicator functions of disjoint node intervals times vectors.
#[derive(Clone, Debug)]
pub struct SimpleSection {
    family: Arc<MonotoneFamily>,
    pieces: Vec<Piece>,
}

impl SimpleSection {
    pub fn new(family: Arc<MonotoneFamily>, mut pieces: Vec<Piece>) -> Result<Self> {
        pieces.sort_by_key(|p| p.start);
        for p in &pieces {
            family.grid().check_index(p.end)?;
            if p.start > p.end {
                return Err(Error::param(format!("piece {}..={} is empty", p.start, p.end)));
            }
            if p.vector.len() != family.dim(p.start) {
                return Err(Error::DimensionMismatch {
                    expected: family.dim(p.start),
                    found: p.vector.len(),
                });
            }
        }
        if let Some(w) = pieces.windows(2).find(|w| w[1].start <= w[0].end) {
            return Err(Error::param(format!(
                "pieces starting at {} and {} overlap",
                w[0].start, w[1].start
            )));
        }
        Ok(Self { family, pieces })
    }

    pub fn family(&self) -> &Arc<MonotoneFamily> {
        &self.family
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Piece containing node `i`, if any.
    pub fn piece_at(&self, i: usize) -> Option<&Piece> {
        let k = self.pieces.partition_point(|p| p.start <= i);
        k.checked_sub(1)
            .map(|k| &self.pieces[k])
            .filter(|p| p.end >= i)
    }

    /// Nodal values, zero outside every piece.
    pub fn to_section(&self) -> Section {
        let mut values: Vec<DVector<f64>> = (0..self.family.len())
            .map(|i| DVector::zeros(self.family.dim(i)))
            .collect();
        for p in &self.pieces {
            for (off, v) in self.family.orbit(p.start, &p.vector)[..=p.end - p.start]
                .iter()
                .enumerate()
            {
                values[p.start + off] = v.clone();
            }
        }
        Section::from_parts(self.family.clone(), values)
    }
}

/// Result of [`ApproximateBySimple::approximate_by_simple`].
#[derive(Clone, Debug)]
pub struct SimpleApproximation {
    pub simple: SimpleSection,
    /// `∫_J ‖u - s‖_t dt`, with `u` interpolated linearly inside cells.
    pub residual: f64,
    /// Smallest residual reachable on this grid.
    pub floor: f64,
    /// `max_i ‖s(t_i)‖ / ‖u(t_i)‖` over nodes where `u` is nonzero.
    pub max_ratio: f64,
}

pub trait ApproximateBySimple {
    /// Simple section on the node window whose integrated distance to `u` is
    /// at most `tol` and whose norm never exceeds `2‖u(t)‖_t` at a node.
    fn approximate_by_simple(
        &self,
        window: RangeInclusive<usize>,
        tol: f64,
    ) -> Result<SimpleApproximation>;
}

impl ApproximateBySimple for SimpleSection {
    fn approximate_by_simple(
        &self,
        window: RangeInclusive<usize>,
        _tol: f64,
    ) -> Result<SimpleApproximation> {
        check_window(&self.family, &window)?;
        Ok(SimpleApproximation {
            simple: self.clone(),
            residual: 0.0,
            floor: 0.0,
            max_ratio: 1.0,
        })
    }
}

/// Error of the constant `s` against `u` on cell `k`, where `u` runs linearly
/// from `P u_k` to `u_{k+1}` and `s` is already pushed to node `k + 1`.
fn cell_error(u: &Section, k: usize, s: &DVector<f64>) -> f64 {
    let family = u.family();
    let node = family.node(k + 1);
    let left = family.step(k, u.value(k)) - s;
    let right = u.value(k + 1) - s;
    0.5 * family.grid().cell_width(k)
        * (node.norm_unchecked(left.as_slice()) + node.norm_unchecked(right.as_slice()))
}

impl ApproximateBySimple for Section {
    fn approximate_by_simple(
        &self,
        window: RangeInclusive<usize>,
        tol: f64,
    ) -> Result<SimpleApproximation> {
        let family = self.family();
        let (a, b) = check_window(family, &window)?;
        if !(tol > 0.0) {
            return Err(Error::param("tolerance must be positive"));
        }
        let grid = family.grid();
        let cell_floor: Vec<f64> = (a..b)
            .map(|k| 0.5 * grid.cell_width(k) * self.increment(k, k + 1))
            .collect();
        let floor: f64 = cell_floor.iter().sum();
        if tol < floor {
            return Err(Error::Resolution {
                requested: tol,
                achievable: floor,
            });
        }
        let slack = tol - floor;
        let span = grid.node(b) - grid.node(a);
        let norms = self.node_norms();

        let mut pieces = Vec::new();
        let mut residual = 0.0;
        let mut start = a;
        while start <= b {
            let v = self.value(start).clone();
            // The first cell of a piece costs exactly its floor.
            let (mut err, mut piece_floor, mut len) = if start < b {
                (cell_floor[start - a], cell_floor[start - a], grid.cell_width(start))
            } else {
                (0.0, 0.0, 0.0)
            };
            let mut current = v.clone();
            let mut end = start;
            while end < b {
                let next = family.step(end, &current);
                let next_norm = family.node(end + 1).norm_unchecked(next.as_slice());
                if next_norm > 2.0 * norms[end + 1] {
                    break;
                }
                let (add_err, add_floor, add_len) = if end + 1 < b {
                    let s = family.step(end + 1, &next);
                    (
                        cell_error(self, end + 1, &s),
                        cell_floor[end + 1 - a],
                        grid.cell_width(end + 1),
                    )
                } else {
                    (0.0, 0.0, 0.0)
                };
                let budget =
                    piece_floor + add_floor + slack * (len + add_len) / span.max(f64::MIN_POSITIVE);
                if err + add_err > budget {
                    break;
                }
                err += add_err;
                piece_floor += add_floor;
                len += add_len;
                current = next;
                end += 1;
            }
            residual += err;
            pieces.push(Piece {
                start,
                end,
                vector: v,
            });
            start = end + 1;
        }

        let simple = SimpleSection::new(family.clone(), pieces)?;
        let approx = simple.to_section();
        let max_ratio = (a..=b)
            .filter(|&i| norms[i] > 0.0)
            .map(|i| family.node(i).norm_unchecked(approx.value(i).as_slice()) / norms[i])
            .fold(0.0, f64::max);
        Ok(SimpleApproximation {
            simple,
            residual,
            floor,
            max_ratio,
        })
    }
}

/// Backward running average `(1/|W|) ∫_W u`, `W = [t_i - h, t_i] ∩ grid`,
/// pushed to node `i`. The window shrinks at the left end of the grid.
pub fn smooth_mh(u: &Section, h: f64) -> Result<Section> {
    let grid = u.grid();
    if grid.len() > 1 && !(h >= grid.min_cell_width() * (1.0 - 1e-12)) {
        return Err(Error::param(format!(
            "averaging width {h} is below the smallest cell width {}",
            grid.min_cell_width()
        )));
    }
    let mut values = Vec::with_capacity(u.len());
    for i in 0..u.len() {
        let j = grid.backward_window_start(i, h);
        if j == i {
            values.push(u.value(i).clone());
        } else {
            let (_, integral) = local_integral(u, j..=i)?;
            values.push(integral / (grid.node(i) - grid.node(j)));
        }
    }
    Ok(Section::from_parts(u.family().clone(), values))
}

/// `(1/h) ∫_{t_i-h}^{t_i} ‖P(s,t_i) u(s) - u(t_i)‖_{t_i} ds` by trapezoid.
pub fn lebesgue_point_residual(u: &Section, node: usize, h: f64) -> Result<f64> {
    let grid = u.grid();
    grid.check_index(node)?;
    let slack = 1e-12 * (grid.t_end() - grid.t_start());
    if grid.node(node) - h < grid.node(0) - slack {
        return Err(Error::WindowOutsideGrid { node, width: h });
    }
    let j = grid.backward_window_start(node, h);
    if j == node {
        return Err(Error::param(format!(
            "width {h} does not cover a cell before node {node}"
        )));
    }
    let w = grid.trapezoid_weights(j, node);
    let family = u.family();
    let target = family.node(node);
    let total: f64 = (j..=node)
        .map(|s| {
            let diff = family.push(s, node, u.value(s)) - u.value(node);
            w[s - j] * target.norm_unchecked(diff.as_slice())
        })
        .sum();
    Ok(total / h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{nested_lq, sup_counterexample, LengthProfile};
    use crate::grid::TimeGrid;
    use crate::norm::{Exponent, NormedNode};
    use crate::section::{lp_direct_norm, section_from_function};

    fn nested(n: usize, mesh: usize) -> Arc<MonotoneFamily> {
        let g = TimeGrid::uniform(0.0, 1.0, n).unwrap();
        let profile = LengthProfile::Affine {
            at_zero: 1.0,
            slope: -0.5,
        };
        Arc::new(nested_lq(&profile, Exponent::TWO, mesh, g).unwrap())
    }

    fn smooth(fam: &Arc<MonotoneFamily>) -> Section {
        section_from_function(fam.clone(), |t, x| x.sin() * (-t).exp())
    }

    #[test]
    fn constant_integrand_integrates_to_length() {
        let g = TimeGrid::uniform(0.0, 2.0, 9).unwrap();
        let fam = Arc::new(MonotoneFamily::constant("c", g, NormedNode::euclidean(2)));
        let v = DVector::from_vec(vec![1.0, -3.0]);
        let u = Section::constant(fam.clone(), &v).unwrap();
        let (k, x) = local_integral(&u, 2..=7).unwrap();
        assert_eq!(k, 7);
        let len = fam.grid().node(7) - fam.grid().node(2);
        assert!((x - &v * len).amax() < 1e-14);
        let z = Section::zero(fam);
        assert_eq!(local_integral(&z, 0..=8).unwrap().1, DVector::zeros(2));
    }

    #[test]
    fn integral_is_additive() {
        let fam = nested(40, 64);
        let u = smooth(&fam);
        let (_, left) = local_integral(&u, 3..=17).unwrap();
        let (_, right) = local_integral(&u, 17..=31).unwrap();
        let (_, whole) = local_integral(&u, 3..=31).unwrap();
        let joined = fam.apply_transition(17, 31, &left).unwrap() + right;
        assert!((joined - whole).amax() < 1e-12);
    }

    #[test]
    fn bochner_inequality_holds() {
        let fam = nested(30, 32);
        let u = smooth(&fam);
        let terms = bochner_terms(&u, 0..=29).unwrap();
        assert!(terms.residual() <= 1e-12);
        assert!(terms.pushed_sum < terms.direct_sum);
    }

    #[test]
    fn simple_input_is_returned_unchanged() {
        let fam = nested(10, 8);
        let piece = Piece {
            start: 2,
            end: 5,
            vector: DVector::from_element(8, 1.0),
        };
        let s = SimpleSection::new(fam, vec![piece.clone()]).unwrap();
        let out = s.approximate_by_simple(0..=9, 1e-6).unwrap();
        assert_eq!(out.residual, 0.0);
        assert_eq!(out.simple.pieces(), &[piece]);
    }

    #[test]
    fn overlapping_pieces_rejected() {
        let fam = nested(10, 4);
        let p = |start, end| Piece {
            start,
            end,
            vector: DVector::zeros(4),
        };
        assert!(SimpleSection::new(fam, vec![p(0, 3), p(3, 5)]).is_err());
    }

    #[test]
    fn simple_approximation_meets_tolerance() {
        let fam = nested(512, 64);
        let u = smooth(&fam);
        let approx = u.approximate_by_simple(0..=511, 1e-3).unwrap();
        assert!(approx.residual <= 1e-3, "{}", approx.residual);
        assert!(approx.max_ratio <= 2.0);
        assert!(approx.simple.pieces().len() < 512);
    }

    #[test]
    fn tolerance_below_floor_is_refused() {
        let fam = nested(16, 16);
        let u = smooth(&fam);
        match u.approximate_by_simple(0..=15, 1e-9) {
            Err(Error::Resolution { achievable, .. }) => assert!(achievable > 1e-9),
            other => panic!("expected resolution error, got {other:?}"),
        }
    }

    #[test]
    fn constant_section_is_fixed_by_smoothing() {
        let fam = nested(32, 16);
        let v = DVector::from_fn(16, |k, _| k as f64);
        let u = Section::constant(fam, &v).unwrap();
        let m = smooth_mh(&u, 0.2).unwrap();
        for i in 0..32 {
            assert!((m.value(i) - u.value(i)).amax() < 1e-12);
        }
    }

    #[test]
    fn smoothing_converges_linearly() {
        let fam = nested(256, 32);
        let u = smooth(&fam);
        let err = |h: f64| {
            let m = smooth_mh(&u, h).unwrap();
            lp_direct_norm(&m.sub(&u).unwrap(), Exponent::TWO).value
        };
        let (e1, e2) = (err(0.1), err(0.05));
        assert!(e2 < e1);
        let ratio = e1 / e2;
        assert!((1.6..2.4).contains(&ratio), "{ratio}");
    }

    #[test]
    fn full_span_smoothing_is_mean() {
        let fam = nested(16, 8);
        let u = smooth(&fam);
        let span = fam.grid().node_span();
        let m = smooth_mh(&u, span).unwrap();
        let (_, integral) = local_integral(&u, 0..=15).unwrap();
        assert!((m.value(15) - integral / span).amax() < 1e-14);
        assert_eq!(m.value(0), u.value(0));
    }

    #[test]
    fn lebesgue_residual_cases() {
        let g = TimeGrid::uniform(0.0, 1.0, 64).unwrap();
        let fam = Arc::new(sup_counterexample(32, g).unwrap());
        let u = section_from_function(fam, |_, s| s);
        // The section is fixed by the transitions even across the jump.
        assert_eq!(lebesgue_point_residual(&u, 40, 0.25).unwrap(), 0.0);
        assert!(matches!(
            lebesgue_point_residual(&u, 3, 0.25),
            Err(Error::WindowOutsideGrid { .. })
        ));
        let fam = nested(128, 32);
        let u = smooth(&fam);
        let r1 = lebesgue_point_residual(&u, 100, 0.1).unwrap();
        let r2 = lebesgue_point_residual(&u, 100, 0.05).unwrap();
        assert!(r2 < 0.6 * r1);
    }
}
