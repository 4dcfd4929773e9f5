//! Completeness probe: Cauchy sequences of sections and their limits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norm::Exponent;
use crate::report::{Status, VerificationReport, Witness};
use crate::section::Section;
use crate::sobolev::sobolev_norm;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// `u_k = u`.
    Constant,
    /// `u_k = (1 - 2^{-k}) u`.
    #[default]
    Geometric,
    /// Geometric for the first half, then an oscillation of size `‖u‖/2`.
    NonCauchyTail,
}

impl Generator {
    /// Terms `u_1 ..= u_terms` and the claimed limit.
    pub fn sequence(self, base: &Section, terms: usize) -> (Vec<Section>, Section) {
        let seq = (1..=terms)
            .map(|k| match self {
                Generator::Constant => base.clone(),
                Generator::Geometric => base.scale(1.0 - 0.5f64.powi(k as i32)),
                Generator::NonCauchyTail => {
                    let geometric = 1.0 - 0.5f64.powi(k as i32);
                    if k <= terms / 2 {
                        base.scale(geometric)
                    } else {
                        let sign = if k % 2 == 0 { 0.5 } else { -0.5 };
                        base.scale(geometric + sign)
                    }
                }
            })
            .collect();
        (seq, base.clone())
    }
}

/// Checks that successive increments in the discrete `W^{1,p}` norm never
/// grow, that the last one is below `tolerance`, and that the last term
/// matches the limit nodewise and in norm. Distances are relative to
/// `max(1, ‖limit‖)`.
pub fn cauchy_completeness_probe(
    generator: Generator,
    base: &Section,
    terms: usize,
    p: Exponent,
    tolerance: f64,
) -> Result<VerificationReport> {
    if terms < 2 {
        return Err(Error::param("the probe needs at least two terms"));
    }
    let (seq, limit) = generator.sequence(base, terms);
    let limit_norm = sobolev_norm(&limit, p)?.total;
    let scale = limit_norm.max(1.0);
    let increments: Vec<f64> = seq
        .windows(2)
        .map(|w| Ok(sobolev_norm(&w[1].sub(&w[0])?, p)?.total / scale))
        .collect::<Result<_>>()?;

    let growing = increments
        .windows(2)
        .position(|d| d[1] > d[0] + tolerance)
        .map(|k| k + 1);

    let last = seq.last().expect("at least two terms");
    let diff = last.sub(&limit)?;
    let node_error = diff.node_norms().into_iter().fold(0.0, f64::max) / scale;
    let norm_gap = (sobolev_norm(last, p)?.total - limit_norm).abs() / scale;
    let final_increment = *increments.last().expect("at least one increment");
    let residual = final_increment.max(node_error).max(norm_gap);

    let report = match growing {
        Some(k) => VerificationReport::with_status(
            "cauchy_completeness",
            Status::Fail,
            residual.max(increments[k]),
            tolerance,
            Some(Witness::new(
                vec![k + 1, k + 2],
                format!(
                    "increment between terms {} and {} is {:.3e}, up from {:.3e}",
                    k + 1,
                    k + 2,
                    increments[k],
                    increments[k - 1]
                ),
            )),
        ),
        None => VerificationReport::from_residual(
            "cauchy_completeness",
            residual,
            tolerance,
            Some(Witness::new(
                vec![terms],
                format!("last increment {final_increment:.3e}, node error {node_error:.3e}, norm gap {norm_gap:.3e}"),
            ))
            .filter(|_| residual > tolerance),
        ),
    };
    Ok(report
        .metric("final_increment", final_increment)
        .metric("node_error", node_error)
        .metric("norm_gap", norm_gap)
        .metric("limit_norm", limit_norm))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::fixtures::{shrinking_l2, smooth_section};

    fn base() -> Section {
        smooth_section(shrinking_l2(32, 16).unwrap())
    }

    #[test]
    fn constant_sequence_passes() {
        let r = cauchy_completeness_probe(Generator::Constant, &base(), 5, Exponent::TWO, 1e-9).unwrap();
        assert!(r.passed(), "{r:?}");
        assert_eq!(r.worst_residual, 0.0);
    }

    #[test]
    fn geometric_sequence_converges() {
        let r = cauchy_completeness_probe(Generator::Geometric, &base(), 30, Exponent::TWO, 1e-9).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.metrics["norm_gap"] <= 1e-9);
    }

    #[test]
    fn short_geometric_sequence_is_not_close_enough() {
        let r = cauchy_completeness_probe(Generator::Geometric, &base(), 10, Exponent::TWO, 1e-9).unwrap();
        assert_eq!(r.status, Status::Fail);
    }

    #[test]
    fn oscillating_tail_fails_with_first_pair() {
        let r = cauchy_completeness_probe(Generator::NonCauchyTail, &base(), 30, Exponent::TWO, 1e-9).unwrap();
        assert_eq!(r.status, Status::Fail);
        assert_eq!(r.witness.unwrap().indices, vec![15, 16]);
    }
}
