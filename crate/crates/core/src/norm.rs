//! Finite-dimensional node norms.
//!
//! Every node of a family carries one of three discrete norms. Kernels of
//! semi-norms are realised as coordinate masks: a coordinate that is masked
//! out (or carries zero weight) does not contribute, and vectors are stored
//! with zeros there.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// An integrability exponent in `[1, ∞]`.
///
/// Serialises as a JSON number, or as the string `"inf"` for infinity.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct Exponent(f64);

impl Exponent {
    pub const ONE: Exponent = Exponent(1.0);
    pub const TWO: Exponent = Exponent(2.0);
    pub const INFINITY: Exponent = Exponent(f64::INFINITY);

    pub fn new(p: f64) -> Result<Self> {
        if p >= 1.0 {
            Ok(Exponent(p))
        } else {
            Err(Error::param(format!("exponent {p} is not in [1, inf]")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    pub fn is_infinite(self) -> bool {
        self.0.is_infinite()
    }

    /// `(Σ w_k a_k^p)^{1/p}`, or `max a_k` over positive weights for `p = ∞`.
    pub fn weighted_norm(self, weights: &[f64], values: &[f64]) -> f64 {
        if self.is_infinite() {
            weights
                .iter()
                .zip(values)
                .filter(|(w, _)| **w > 0.0)
                .map(|(_, a)| a.abs())
                .fold(0.0, f64::max)
        } else {
            let p = self.0;
            let sum: f64 = weights
                .iter()
                .zip(values)
                .map(|(w, a)| w * a.abs().powf(p))
                .sum();
            sum.powf(1.0 / p)
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_infinite() {
            f.write_str("inf")
        } else {
            write!(f, "{}", self.0)
        }
    }
}

impl std::str::FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::INFINITY),
            other => other
                .parse::<f64>()
                .map_err(|_| Error::param(format!("cannot parse exponent `{s}`")))
                .and_then(Exponent::new),
        }
    }
}

impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        if self.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Exponent::new(p).map_err(de::Error::custom),
            Raw::Text(s) => s.parse().map_err(de::Error::custom),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NormKind {
    /// `(Σ_{mask} w_k |x_k|^q)^{1/q}`.
    WeightedLq {
        q: Exponent,
        weights: Vec<f64>,
        mask: Vec<bool>,
    },
    /// `(l2_weight · h Σ x_k² + grad_weight · h Σ ((x_{k+1} - x_k)/h)²)^{1/2}`
    /// with zero boundary values on both sides (forward differences).
    DiscreteH1 {
        h: f64,
        l2_weight: f64,
        grad_weight: f64,
    },
    /// `max_{mask} |x_k|`.
    DiscreteSup { mask: Vec<bool> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawNode")]
pub struct NormedNode {
    dim: usize,
    #[serde(flatten)]
    kind: NormKind,
}

#[derive(Deserialize)]
struct RawNode {
    dim: usize,
    #[serde(flatten)]
    kind: NormKind,
}

impl TryFrom<RawNode> for NormedNode {
    type Error = Error;

    fn try_from(raw: RawNode) -> Result<Self> {
        NormedNode::new(raw.dim, raw.kind)
    }
}

impl NormedNode {
    pub fn new(dim: usize, kind: NormKind) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("node dimension must be positive"));
        }
        match &kind {
            NormKind::WeightedLq { weights, mask, .. } => {
                check_len(dim, weights.len())?;
                check_len(dim, mask.len())?;
                if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
                    return Err(Error::param("weights must be finite and nonnegative"));
                }
            }
            NormKind::DiscreteH1 {
                h,
                l2_weight,
                grad_weight,
            } => {
                if !(*h > 0.0 && *l2_weight >= 0.0 && *grad_weight > 0.0) {
                    return Err(Error::param(
                        "H1 norm needs h > 0, l2_weight >= 0, grad_weight > 0",
                    ));
                }
            }
            NormKind::DiscreteSup { mask } => check_len(dim, mask.len())?,
        }
        Ok(Self { dim, kind })
    }

    /// Plain Euclidean norm on `R^dim`.
    pub fn euclidean(dim: usize) -> Self {
        Self::weighted_lq(Exponent::TWO, vec![1.0; dim], vec![true; dim])
            .expect("valid euclidean node")
    }

    pub fn weighted_lq(q: Exponent, weights: Vec<f64>, mask: Vec<bool>) -> Result<Self> {
        Self::new(weights.len(), NormKind::WeightedLq { q, weights, mask })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &NormKind {
        &self.kind
    }

    /// Whether coordinate `k` lies outside the kernel of the norm.
    pub fn is_active(&self, k: usize) -> bool {
        match &self.kind {
            NormKind::WeightedLq { weights, mask, .. } => mask[k] && weights[k] > 0.0,
            NormKind::DiscreteH1 { .. } => true,
            NormKind::DiscreteSup { mask } => mask[k],
        }
    }

    pub fn norm(&self, x: &DVector<f64>) -> Result<f64> {
        check_len(self.dim, x.len())?;
        Ok(self.norm_unchecked(x.as_slice()))
    }

    pub(crate) fn norm_unchecked(&self, x: &[f64]) -> f64 {
        match &self.kind {
            NormKind::WeightedLq { q, weights, mask } => {
                if q.is_infinite() {
                    x.iter()
                        .zip(weights)
                        .zip(mask)
                        .filter(|((_, w), m)| **m && **w > 0.0)
                        .map(|((a, w), _)| w * a.abs())
                        .fold(0.0, f64::max)
                } else if q.value() == 2.0 {
                    let s: f64 = x
                        .iter()
                        .zip(weights)
                        .zip(mask)
                        .filter(|(_, m)| **m)
                        .map(|((a, w), _)| w * a * a)
                        .sum();
                    s.sqrt()
                } else {
                    let q = q.value();
                    let s: f64 = x
                        .iter()
                        .zip(weights)
                        .zip(mask)
                        .filter(|(_, m)| **m)
                        .map(|((a, w), _)| w * a.abs().powf(q))
                        .sum();
                    s.powf(1.0 / q)
                }
            }
            NormKind::DiscreteH1 {
                h,
                l2_weight,
                grad_weight,
            } => {
                let l2: f64 = x.iter().map(|a| a * a).sum();
                let mut grad = 0.0;
                let mut prev = 0.0;
                for &a in x {
                    grad += (a - prev) * (a - prev);
                    prev = a;
                }
                grad += prev * prev;
                (l2_weight * h * l2 + grad_weight * grad / h).sqrt()
            }
            NormKind::DiscreteSup { mask } => x
                .iter()
                .zip(mask)
                .filter(|(_, m)| **m)
                .map(|(a, _)| a.abs())
                .fold(0.0, f64::max),
        }
    }

    /// Canonical representative: zero on kernel coordinates.
    pub fn project_to_active(&self, x: &mut DVector<f64>) {
        for k in 0..self.dim {
            if !self.is_active(k) {
                x[k] = 0.0;
            }
        }
    }

    /// For inner-product norms, a factor `R` with `‖x‖ = |R x|₂` on canonical
    /// representatives, together with its pseudo-inverse. `None` otherwise.
    pub fn hilbert_factor(&self) -> Option<(DMatrix<f64>, DMatrix<f64>)> {
        match &self.kind {
            NormKind::WeightedLq { q, weights, mask } if q.value() == 2.0 => {
                let d: Vec<f64> = weights
                    .iter()
                    .zip(mask)
                    .map(|(w, m)| if *m { w.sqrt() } else { 0.0 })
                    .collect();
                let inv: Vec<f64> = d
                    .iter()
                    .map(|&s| if s > 0.0 { 1.0 / s } else { 0.0 })
                    .collect();
                Some((
                    DMatrix::from_diagonal(&DVector::from_vec(d)),
                    DMatrix::from_diagonal(&DVector::from_vec(inv)),
                ))
            }
            NormKind::DiscreteH1 {
                h,
                l2_weight,
                grad_weight,
            } => {
                let n = self.dim;
                let diag = l2_weight * h + 2.0 * grad_weight / h;
                let off = -grad_weight / h;
                let gram = DMatrix::from_fn(n, n, |i, j| {
                    if i == j {
                        diag
                    } else if i.abs_diff(j) == 1 {
                        off
                    } else {
                        0.0
                    }
                });
                let chol = gram.cholesky()?;
                let r = chol.l().transpose();
                let r_inv = r.clone().try_inverse()?;
                Some((r, r_inv))
            }
            _ => None,
        }
    }
}

fn check_len(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h1(dim: usize, a: f64) -> NormedNode {
        let h = 1.0 / (dim as f64 + 1.0);
        NormedNode::new(
            dim,
            NormKind::DiscreteH1 {
                h,
                l2_weight: a,
                grad_weight: 1.0 / a,
            },
        )
        .unwrap()
    }

    #[test]
    fn exponent_parsing() {
        assert!("inf".parse::<Exponent>().unwrap().is_infinite());
        assert_eq!("2".parse::<Exponent>().unwrap(), Exponent::TWO);
        assert!("0.5".parse::<Exponent>().is_err());
        let e: Exponent = serde_json::from_str("\"inf\"").unwrap();
        assert!(e.is_infinite());
        assert_eq!(serde_json::to_string(&Exponent::INFINITY).unwrap(), "\"inf\"");
    }

    #[test]
    fn zero_vector_has_zero_norm() {
        let nodes = [
            NormedNode::euclidean(4),
            h1(4, 0.7),
            NormedNode::new(
                4,
                NormKind::DiscreteSup {
                    mask: vec![true, false, true, true],
                },
            )
            .unwrap(),
        ];
        for node in &nodes {
            assert_eq!(node.norm(&DVector::zeros(4)).unwrap(), 0.0);
        }
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let node = NormedNode::euclidean(3);
        assert!(matches!(
            node.norm(&DVector::zeros(2)),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
    }

    #[test]
    fn masked_coordinates_are_kernel() {
        let node =
            NormedNode::weighted_lq(Exponent::ONE, vec![1.0, 2.0, 3.0], vec![true, false, true])
                .unwrap();
        let x = DVector::from_vec(vec![1.0, 100.0, -1.0]);
        assert_eq!(node.norm(&x).unwrap(), 4.0);
        assert!(!node.is_active(1));
    }

    #[test]
    fn hilbert_factor_reproduces_norm() {
        let node = h1(6, 0.6);
        let (r, r_inv) = node.hilbert_factor().unwrap();
        let x = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.5, 0.0, 1.5]);
        assert!(((&r * &x).norm() - node.norm(&x).unwrap()).abs() < 1e-12);
        assert!((&r * &r_inv - DMatrix::identity(6, 6)).amax() < 1e-12);
    }

    #[test]
    fn sup_norm_ignores_masked() {
        let node = NormedNode::new(
            3,
            NormKind::DiscreteSup {
                mask: vec![true, true, false],
            },
        )
        .unwrap();
        let x = DVector::from_vec(vec![0.25, -0.5, 1.0]);
        assert_eq!(node.norm(&x).unwrap(), 0.5);
    }
}
