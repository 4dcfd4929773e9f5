use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::NormedNode;

/// Operator norm of a linear map between two node spaces.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatorNorm {
    pub value: f64,
    /// `true` for the singular-value path; otherwise `value` is a lower bound.
    pub exact: bool,
}

/// `sup ‖A x‖_dst / ‖x‖_src` over canonical representatives `x` of `src`
/// (vectors vanishing on its kernel coordinates).
///
/// When both norms come from inner products the answer is the largest singular
/// value of `R_dst A R_src⁺`. Otherwise it is the best ratio over `samples`
/// random directions, polished by coordinate ascent.
pub fn estimate_operator_norm(
    a: &DMatrix<f64>,
    src: &NormedNode,
    dst: &NormedNode,
    samples: usize,
    seed: u64,
) -> Result<OperatorNorm> {
    check_shape(a, src, dst)?;
    if let (Some((_, src_pinv)), Some((dst_r, _))) = (src.hilbert_factor(), dst.hilbert_factor()) {
        let m = dst_r * a * src_pinv;
        let value = m.singular_values().iter().copied().fold(0.0, f64::max);
        return Ok(OperatorNorm { value, exact: true });
    }
    sampled_operator_norm(a, src, dst, samples, seed)
}

fn check_shape(a: &DMatrix<f64>, src: &NormedNode, dst: &NormedNode) -> Result<()> {
    if a.ncols() != src.dim() {
        return Err(Error::DimensionMismatch {
            expected: src.dim(),
            found: a.ncols(),
        });
    }
    if a.nrows() != dst.dim() {
        return Err(Error::DimensionMismatch {
            expected: dst.dim(),
            found: a.nrows(),
        });
    }
    Ok(())
}

/// Sampling plus ascent regardless of the norm kinds. Always a lower bound.
pub fn sampled_operator_norm(
    a: &DMatrix<f64>,
    src: &NormedNode,
    dst: &NormedNode,
    samples: usize,
    seed: u64,
) -> Result<OperatorNorm> {
    check_shape(a, src, dst)?;
    let active: Vec<usize> = (0..src.dim()).filter(|&k| src.is_active(k)).collect();
    if active.is_empty() || a.iter().all(|x| *x == 0.0) {
        return Ok(OperatorNorm {
            value: 0.0,
            exact: false,
        });
    }
    let ratio = |x: &DVector<f64>| {
        let nx = src.norm_unchecked(x.as_slice());
        if nx > 0.0 {
            dst.norm_unchecked((a * x).as_slice()) / nx
        } else {
            0.0
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = DVector::zeros(src.dim());
    let mut best_ratio = -1.0;
    let consider = |x: DVector<f64>, best: &mut DVector<f64>, best_ratio: &mut f64| {
        let r = ratio(&x);
        if r > *best_ratio {
            *best_ratio = r;
            *best = x;
        }
    };
    for &k in &active {
        let mut e = DVector::zeros(src.dim());
        e[k] = 1.0;
        consider(e, &mut best, &mut best_ratio);
    }
    for _ in 0..samples {
        let mut x = DVector::zeros(src.dim());
        for &k in &active {
            x[k] = rng.gen_range(-1.0..1.0);
        }
        consider(x, &mut best, &mut best_ratio);
    }

    // Coordinate ascent: rotate the current direction towards each coordinate
    // axis, x(θ) = cos θ · x/|x| + sin θ · e_k, and keep the best angle.
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    for _sweep in 0..400 {
        let before = best_ratio;
        for &k in &active {
            let base = &best / best.amax();
            let along = |theta: f64| {
                let mut x = &base * theta.cos();
                x[k] += theta.sin();
                ratio(&x)
            };
            let coarse = 16;
            let step = std::f64::consts::PI / coarse as f64;
            let (mut i_best, mut r_best) = (0usize, along(-std::f64::consts::FRAC_PI_2));
            for i in 1..coarse {
                let r = along(-std::f64::consts::FRAC_PI_2 + i as f64 * step);
                if r > r_best {
                    i_best = i;
                    r_best = r;
                }
            }
            let centre = -std::f64::consts::FRAC_PI_2 + i_best as f64 * step;
            let (mut lo, mut hi) = (centre - step, centre + step);
            let mut c = hi - golden * (hi - lo);
            let mut d = lo + golden * (hi - lo);
            let (mut fc, mut fd) = (along(c), along(d));
            for _ in 0..80 {
                if fc > fd {
                    hi = d;
                    d = c;
                    fd = fc;
                    c = hi - golden * (hi - lo);
                    fc = along(c);
                } else {
                    lo = c;
                    c = d;
                    fc = fd;
                    d = lo + golden * (hi - lo);
                    fd = along(d);
                }
            }
            for theta in [centre, 0.5 * (lo + hi)] {
                let mut x = &base * theta.cos();
                x[k] += theta.sin();
                consider(x, &mut best, &mut best_ratio);
            }
        }
        if best_ratio - before <= 1e-15 * best_ratio {
            break;
        }
    }
    Ok(OperatorNorm {
        value: best_ratio.max(0.0),
        exact: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::{Exponent, NormKind};

    #[test]
    fn identity_has_unit_norm() {
        let n = NormedNode::euclidean(4);
        let r = estimate_operator_norm(&DMatrix::identity(4, 4), &n, &n, 10, 1).unwrap();
        assert_eq!(r, OperatorNorm { value: 1.0, exact: true });
        let s = NormedNode::new(4, NormKind::DiscreteSup { mask: vec![true; 4] }).unwrap();
        let r = estimate_operator_norm(&DMatrix::identity(4, 4), &s, &s, 10, 1).unwrap();
        assert_eq!(r.value, 1.0);
        assert!(!r.exact);
    }

    #[test]
    fn diagonal_map_norm() {
        let n = NormedNode::euclidean(2);
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let r = estimate_operator_norm(&a, &n, &n, 10, 1).unwrap();
        assert!((r.value - 2.0).abs() < 1e-15);
    }

    #[test]
    fn sampled_path_matches_singular_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = NormedNode::euclidean(8);
        let a = DMatrix::from_fn(8, 8, |_, _| rng.gen_range(-1.0..1.0));
        let exact = estimate_operator_norm(&a, &n, &n, 0, 0).unwrap().value;
        let sampled = sampled_operator_norm(&a, &n, &n, 200, 5).unwrap().value;
        assert!(sampled <= exact * (1.0 + 1e-12));
        assert!(exact - sampled <= 1e-6, "{exact} vs {sampled}");
    }

    #[test]
    fn weighted_l1_to_l1_is_max_column_ratio() {
        let src = NormedNode::weighted_lq(Exponent::ONE, vec![1.0, 2.0], vec![true; 2]).unwrap();
        let dst = NormedNode::weighted_lq(Exponent::ONE, vec![1.0, 1.0], vec![true; 2]).unwrap();
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 3.0, 0.0, 1.0]);
        // Column norms 1 and 4 over source weights 1 and 2.
        let r = estimate_operator_norm(&a, &src, &dst, 50, 3).unwrap();
        assert!((r.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_directions_are_ignored() {
        let src = NormedNode::weighted_lq(Exponent::TWO, vec![1.0, 1.0], vec![true, false]).unwrap();
        let dst = NormedNode::euclidean(2);
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 100.0]);
        let r = estimate_operator_norm(&a, &src, &dst, 5, 3).unwrap();
        assert!((r.value - 1.0).abs() < 1e-15);
    }
}
