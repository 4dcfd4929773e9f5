use serde::Serialize;

use crate::error::{Error, Result};
use crate::norm::Exponent;
use crate::report::{Status, VerificationReport};
use crate::section::{quadrature_norm, Section};

/// Shifts, in cells, used by [`difference_quotient_criterion`].
pub const SHIFTS: [usize; 4] = [1, 2, 4, 8];

/// A log-log slope of `C_h` against `h` below this counts as divergence.
pub const DIVERGENCE_SLOPE: f64 = -0.25;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ShiftFit {
    /// `C_h = ‖(u(t + h) - P u(t)) / h‖_{L^p(J)}` per shift.
    pub constants: Vec<(usize, f64)>,
    /// `max_h C_h`.
    pub fitted_c: f64,
    /// Least-squares slope of `log C_h` against `log h`.
    pub slope: f64,
}

/// Shifted differences `u(t_{i+h}) - P(t_i, t_{i+h}) u(t_i)`, divided by the
/// time step and measured in the direct `L^p` norm over the window of nodes
/// that admit the largest shift.
pub fn shift_constants(u: &Section, p: Exponent) -> Result<ShiftFit> {
    let n = u.len();
    let largest = SHIFTS[SHIFTS.len() - 1];
    if n < largest + 2 {
        return Err(Error::param(format!(
            "need at least {} nodes for shifts up to {largest}",
            largest + 2
        )));
    }
    let grid = u.grid();
    let end = n - 1 - largest;
    let mut constants = Vec::with_capacity(SHIFTS.len());
    for &h in &SHIFTS {
        let q: Vec<f64> = (0..=end)
            .map(|i| u.increment(i, i + h) / (grid.node(i + h) - grid.node(i)))
            .collect();
        constants.push((h, quadrature_norm(grid, &q, 0, p)));
    }
    let fitted_c = constants.iter().map(|c| c.1).fold(0.0, f64::max);
    let slope = if constants.iter().all(|c| c.1 > 0.0) {
        let pts: Vec<(f64, f64)> = constants
            .iter()
            .map(|&(h, c)| ((h as f64).ln(), c.ln()))
            .collect();
        log_slope(&pts)
    } else {
        0.0
    };
    Ok(ShiftFit {
        constants,
        fitted_c,
        slope,
    })
}

pub(crate) fn log_slope(points: &[(f64, f64)]) -> f64 {
    let m = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / m;
    let my = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        0.0
    } else {
        sxy / sxx
    }
}

/// Bounded shift quotients point to a Sobolev section; quotients growing as
/// the shift shrinks (slope below [`DIVERGENCE_SLOPE`]) are reported as
/// divergent.
pub fn difference_quotient_criterion(u: &Section, p: Exponent) -> Result<VerificationReport> {
    if p.value() <= 1.0 {
        return Err(Error::param("the shift criterion needs p > 1"));
    }
    let fit = shift_constants(u, p)?;
    let steepness = (-fit.slope).max(0.0);
    let tolerance = -DIVERGENCE_SLOPE;
    let mut report = if steepness <= tolerance {
        VerificationReport::from_residual("difference_quotient_criterion", steepness, tolerance, None)
    } else {
        VerificationReport::with_status(
            "difference_quotient_criterion",
            Status::Divergent,
            steepness,
            tolerance,
            None,
        )
    };
    report = report
        .metric("fitted_c", fit.fitted_c)
        .metric("slope", fit.slope);
    for (h, c) in &fit.constants {
        report = report.metric(&format!("c_h{h}"), *c);
    }
    Ok(report)
}

/// Weierstrass-type path `Σ_k 2^{-k/2} cos(2^k π t + k)`, Hölder continuous of
/// order one half, with enough terms to resolve a grid of `n` nodes.
pub fn holder_half_path(n: usize) -> impl Fn(f64) -> f64 {
    let terms = (n as f64).log2().ceil() as i32 + 4;
    move |t: f64| {
        (0..terms)
            .map(|k| {
                let k = k as f64;
                2f64.powf(-0.5 * k) * ((2f64.powf(k) * std::f64::consts::PI * t) + k).cos()
            })
            .sum()
    }
}
