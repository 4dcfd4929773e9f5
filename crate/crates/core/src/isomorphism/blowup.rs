//! Compatibility ratios of affine composition maps on a family of functions
//! with a cusp, whose second derivatives blow up as the cusp is resolved.

use nalgebra::DVector;
use serde::Serialize;

use crate::builders::affine_node;
use crate::error::{Error, Result};

/// Mesh points needed per unit of the largest `n`.
pub const MESH_PER_N: usize = 32;

/// `e^{-1/x} / (e^{-1/x} + e^{-1/(1-x)})`: 0 for `x ≤ 0`, 1 for `x ≥ 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

/// Unnormalised `|x - a|^α η_0(x) η_n(x)` on `(0, len)`: `η_0` cuts off near
/// both ends of the interval, `η_n` removes `[a - 1/n, a + 1/n]` and equals one
/// outside `[a - 2/n, a + 2/n]`.
#[derive(Clone, Copy, Debug)]
pub struct CuspProfile {
    pub a: f64,
    pub len: f64,
    pub exponent: f64,
    pub n: f64,
    delta: f64,
}

impl CuspProfile {
    pub fn new(a: f64, len: f64, exponent: f64, n: usize) -> Self {
        Self {
            a,
            len,
            exponent,
            n: n as f64,
            delta: a.min(len - a) / 3.0,
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        if x <= 0.0 || x >= self.len {
            return 0.0;
        }
        let r = (x - self.a).abs();
        let eta0 = smooth_step(x / self.delta) * smooth_step((self.len - x) / self.delta);
        let etan = smooth_step((r - 1.0 / self.n) * self.n);
        r.powf(self.exponent) * eta0 * etan
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BlowupRow {
    pub n: usize,
    /// `‖f_n(a_t ·) - f_n(a_s ·)‖_{H¹₀(0,1)} / (t - s)`.
    pub ratio: f64,
    /// Constant making the pulled-back `H¹₀(0, a_s)` norm of `f_n` one.
    pub normalization: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlowupTable {
    pub s: f64,
    pub t: f64,
    pub a: f64,
    pub mesh: usize,
    pub exponent: f64,
    pub rows: Vec<BlowupRow>,
    pub strictly_increasing: bool,
    /// `ratio[k+1] / ratio[k]`.
    pub growth_factors: Vec<f64>,
}

impl BlowupTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,ratio,normalization\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{}\n", r.n, r.ratio, r.normalization));
        }
        out
    }
}

/// For each `n`, normalises `f_n` in `H¹₀(0, (1+s)/2)` and tabulates
/// `‖f_n((1+t)x/2) - f_n((1+s)x/2)‖_{H¹₀(0,1)} / (t - s)` on a reference
/// mesh of `(0,1)`. With `t = s` every ratio is zero.
pub fn composition_blowup_demo(
    n_values: &[usize],
    s: f64,
    t: f64,
    a: f64,
    mesh: usize,
    exponent: f64,
) -> Result<BlowupTable> {
    if !(0.0 < s && s <= t && t < 1.0) {
        return Err(Error::param(format!("need 0 < s <= t < 1, got s={s}, t={t}")));
    }
    let len = 0.5 * (1.0 + s);
    if !(0.0 < a && a < len) {
        return Err(Error::param(format!("a = {a} must lie in (0, {len})")));
    }
    if n_values.is_empty() || n_values.contains(&0) {
        return Err(Error::param("n values must be positive"));
    }
    if !(exponent > 0.0) {
        return Err(Error::param("exponent must be positive"));
    }
    let max_n = *n_values.iter().max().expect("nonempty");
    let required = MESH_PER_N * max_n;
    if mesh < required {
        return Err(Error::MeshTooCoarse { mesh, required });
    }
    let h = 1.0 / (mesh as f64 + 1.0);
    let xs: Vec<f64> = (1..=mesh).map(|k| k as f64 * h).collect();
    let (a_s, a_t) = (0.5 * (1.0 + s), 0.5 * (1.0 + t));
    let source_norm = affine_node(mesh, a_s)?;
    let target_norm = affine_node(mesh, 1.0)?;

    let rows: Vec<BlowupRow> = n_values
        .iter()
        .map(|&n| {
            let f = CuspProfile::new(a, len, exponent, n);
            let at_s = DVector::from_iterator(mesh, xs.iter().map(|&x| f.eval(a_s * x)));
            let normalization = 1.0 / source_norm.norm_unchecked(at_s.as_slice());
            let ratio = if t == s {
                0.0
            } else {
                let at_t = DVector::from_iterator(mesh, xs.iter().map(|&x| f.eval(a_t * x)));
                normalization * target_norm.norm_unchecked((at_t - at_s).as_slice()) / (t - s)
            };
            BlowupRow {
                n,
                ratio,
                normalization,
            }
        })
        .collect();
    let growth_factors: Vec<f64> = rows.windows(2).map(|w| w[1].ratio / w[0].ratio).collect();
    let strictly_increasing = rows.windows(2).all(|w| w[1].ratio > w[0].ratio);
    Ok(BlowupTable {
        s,
        t,
        a,
        mesh,
        exponent,
        rows,
        strictly_increasing,
        growth_factors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-1.0), 0.0);
        assert_eq!(smooth_step(2.0), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn cusp_vanishes_near_a_and_ends() {
        let f = CuspProfile::new(0.3, 0.6, 2.0 / 3.0, 10);
        assert_eq!(f.eval(0.3), 0.0);
        assert_eq!(f.eval(0.35), 0.0);
        assert_eq!(f.eval(0.0), 0.0);
        assert_eq!(f.eval(0.6), 0.0);
        assert!((f.eval(0.1) - 0.2f64.powf(2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn equal_times_give_zero() {
        let t = composition_blowup_demo(&[4, 8], 0.3, 0.3, 0.3, 256, 2.0 / 3.0).unwrap();
        assert!(t.rows.iter().all(|r| r.ratio == 0.0));
    }

    #[test]
    fn coarse_mesh_rejected() {
        let err = composition_blowup_demo(&[16, 128], 0.2, 0.4, 0.3, 1000, 2.0 / 3.0);
        assert!(matches!(
            err,
            Err(Error::MeshTooCoarse {
                mesh: 1000,
                required: 4096
            })
        ));
    }

    #[test]
    fn normalised_source_norm_is_one() {
        let table = composition_blowup_demo(&[8], 0.2, 0.25, 0.3, 512, 2.0 / 3.0).unwrap();
        let row = table.rows[0];
        let len = 0.6;
        let f = CuspProfile::new(0.3, len, 2.0 / 3.0, 8);
        let h = 1.0 / 513.0;
        let v = DVector::from_fn(512, |k, _| row.normalization * f.eval(0.6 * (k + 1) as f64 * h));
        let norm = affine_node(512, 0.6).unwrap().norm(&v).unwrap();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cusp_exponent_two_thirds_grows() {
        let t = composition_blowup_demo(&[16, 32, 64, 128, 256], 0.2, 0.201, 0.3, 8192, 2.0 / 3.0)
            .unwrap();
        assert!(t.strictly_increasing, "{:?}", t.rows);
        assert!(t.rows[4].ratio / t.rows[0].ratio > 5.0, "{:?}", t.growth_factors);
    }

    #[test]
    fn exponent_two_stays_bounded() {
        let t = composition_blowup_demo(&[16, 32, 64, 128, 256], 0.2, 0.201, 0.3, 8192, 2.0).unwrap();
        let max = t.rows.iter().map(|r| r.ratio).fold(0.0, f64::max);
        let min = t.rows.iter().map(|r| r.ratio).fold(f64::INFINITY, f64::min);
        assert!(max / min < 1.1, "{:?}", t.rows);
    }
}
