//! Sections of a family and their direct-integral norms.

use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::MonotoneFamily;
use crate::grid::TimeGrid;
use crate::norm::Exponent;

/// One vector per grid node, each living in that node's space.
#[derive(Clone, Debug)]
pub struct Section {
    family: Arc<MonotoneFamily>,
    values: Vec<DVector<f64>>,
}

impl Section {
    pub fn new(family: Arc<MonotoneFamily>, values: Vec<DVector<f64>>) -> Result<Self> {
        if values.len() != family.len() {
            return Err(Error::DimensionMismatch {
                expected: family.len(),
                found: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            if v.len() != family.dim(i) {
                return Err(Error::DimensionMismatch {
                    expected: family.dim(i),
                    found: v.len(),
                });
            }
        }
        Ok(Self { family, values })
    }

    pub fn zero(family: Arc<MonotoneFamily>) -> Self {
        let values = (0..family.len())
            .map(|i| DVector::zeros(family.dim(i)))
            .collect();
        Self { family, values }
    }

    /// The section `t ↦ P(t_0, t) v` generated by one vector of the first node.
    pub fn constant(family: Arc<MonotoneFamily>, v: &DVector<f64>) -> Result<Self> {
        if v.len() != family.dim(0) {
            return Err(Error::DimensionMismatch {
                expected: family.dim(0),
                found: v.len(),
            });
        }
        let values = family.orbit(0, v);
        Ok(Self { family, values })
    }

    pub(crate) fn from_parts(family: Arc<MonotoneFamily>, values: Vec<DVector<f64>>) -> Self {
        debug_assert_eq!(values.len(), family.len());
        Self { family, values }
    }

    pub fn family(&self) -> &Arc<MonotoneFamily> {
        &self.family
    }

    pub fn grid(&self) -> &TimeGrid {
        self.family.grid()
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn value(&self, i: usize) -> &DVector<f64> {
        &self.values[i]
    }

    pub fn into_values(self) -> Vec<DVector<f64>> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `‖u(t_i)‖_{t_i}` for every node.
    pub fn node_norms(&self) -> Vec<f64> {
        self.values
            .iter()
            .enumerate()
            .map(|(i, v)| self.family.node(i).norm_unchecked(v.as_slice()))
            .collect()
    }

    /// `‖u(t_j) - P(t_i, t_j) u(t_i)‖_{t_j}`.
    pub fn increment(&self, i: usize, j: usize) -> f64 {
        let pushed = self.family.push(i, j, &self.values[i]);
        self.family
            .node(j)
            .norm_unchecked((&self.values[j] - pushed).as_slice())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self::from_parts(
            self.family.clone(),
            self.values.iter().map(|v| v * alpha).collect(),
        )
    }

    pub fn add(&self, other: &Section) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Section) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(
        &self,
        other: &Section,
        f: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64>,
    ) -> Result<Self> {
        if !same_family(&self.family, &other.family) {
            return Err(Error::FamilyMismatch(
                self.family.label().to_string(),
                other.family.label().to_string(),
            ));
        }
        Ok(Self::from_parts(
            self.family.clone(),
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(a, b))
                .collect(),
        ))
    }

    /// Applies `f(node, value)` at every node; `f` must keep dimensions.
    pub fn map_nodes(&self, f: impl Fn(usize, &DVector<f64>) -> DVector<f64>) -> Result<Self> {
        let values = self.values.iter().enumerate().map(|(i, v)| f(i, v)).collect();
        Self::new(self.family.clone(), values)
    }

    /// `t,norm` rows for plotting.
    pub fn norms_csv(&self) -> String {
        let mut out = String::from("t,norm\n");
        for (t, n) in self.grid().nodes().iter().zip(self.node_norms()) {
            writeln!(out, "{t},{n}").expect("writing to a String");
        }
        out
    }
}

pub(crate) fn same_family(a: &Arc<MonotoneFamily>, b: &Arc<MonotoneFamily>) -> bool {
    Arc::ptr_eq(a, b)
        || (a.label() == b.label() && a.grid() == b.grid() && a.nodes() == b.nodes())
}

/// Samples `sampler(t, x)` at every node time and spatial coordinate.
/// Coordinates in the kernel of a node norm are set to zero.
pub fn section_from_function(
    family: Arc<MonotoneFamily>,
    sampler: impl Fn(f64, f64) -> f64,
) -> Section {
    let values = (0..family.len())
        .map(|i| {
            let t = family.grid().node(i);
            let node = family.node(i);
            let mut v = DVector::from_iterator(
                node.dim(),
                family.coords(i).iter().map(|&x| sampler(t, x)),
            );
            node.project_to_active(&mut v);
            v
        })
        .collect();
    Section::from_parts(family, values)
}

/// `L^p` norm of `t ↦ ‖u(t)‖_t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DirectNorm {
    pub p: Exponent,
    pub value: f64,
}

/// Composite trapezoid quadrature of `‖u(t_i)‖^p` over the whole grid, then the
/// `p`-th root; the maximum over nodes for `p = ∞`.
pub fn lp_direct_norm(u: &Section, p: Exponent) -> DirectNorm {
    lp_direct_norm_window(u, p, 0, u.len() - 1)
}

/// [`lp_direct_norm`] restricted to the node window `start..=end`.
pub fn lp_direct_norm_window(u: &Section, p: Exponent, start: usize, end: usize) -> DirectNorm {
    let norms = u.node_norms();
    DirectNorm {
        p,
        value: quadrature_norm(u.grid(), &norms[start..=end], start, p),
    }
}

/// `L^p` quadrature of nodal values `f` sitting on nodes `start..start + f.len()`.
pub(crate) fn quadrature_norm(grid: &TimeGrid, f: &[f64], start: usize, p: Exponent) -> f64 {
    if p.is_infinite() {
        return f.iter().copied().fold(0.0, f64::max);
    }
    let w = grid.trapezoid_weights(start, start + f.len() - 1);
    p.weighted_norm(&w, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{nested_lq, sup_counterexample, LengthProfile};

    fn sup_family(n: usize, eps: f64) -> Arc<MonotoneFamily> {
        let g = TimeGrid::spanning(0.0, 1.0, eps, 1.0 - eps, n).unwrap();
        Arc::new(sup_counterexample(64, g).unwrap())
    }

    #[test]
    fn zero_section_has_zero_norm() {
        let fam = sup_family(8, 0.05);
        let z = section_from_function(fam, |_, _| 0.0);
        for p in [Exponent::ONE, Exponent::TWO, Exponent::INFINITY] {
            assert_eq!(lp_direct_norm(&z, p).value, 0.0);
        }
    }

    #[test]
    fn counterexample_norms() {
        let eps = 0.01;
        let fam = sup_family(400, eps);
        let u = section_from_function(fam, |_, s| s);
        assert_eq!(lp_direct_norm(&u, Exponent::INFINITY).value, 1.0);
        let one = lp_direct_norm(&u, Exponent::ONE).value;
        // Trapezoid smears the jump over one cell of width ~2.5e-3.
        assert!((one - (0.75 - 1.5 * eps)).abs() < 2e-3, "{one}");
    }

    #[test]
    fn nested_norm_of_identity_sampler() {
        let g = TimeGrid::uniform(0.0, 1.0, 16).unwrap();
        let profile = LengthProfile::Affine {
            at_zero: 1.0,
            slope: -0.5,
        };
        let fam = Arc::new(nested_lq(&profile, Exponent::TWO, 512, g).unwrap());
        let u = section_from_function(fam.clone(), |_, x| x);
        for (i, n) in u.node_norms().iter().enumerate() {
            let len = 1.0 - 0.5 * fam.grid().node(i);
            let exact = (len.powi(3) / 3.0).sqrt();
            assert!((n - exact).abs() < 1e-3, "{n} vs {exact}");
        }
    }

    #[test]
    fn mismatched_families_rejected() {
        let a = section_from_function(sup_family(8, 0.05), |_, s| s);
        let b = section_from_function(sup_family(9, 0.05), |_, s| s);
        assert!(matches!(a.add(&b), Err(Error::FamilyMismatch(..))));
        assert!(a.add(&a).is_ok());
    }

    #[test]
    fn csv_has_one_row_per_node() {
        let u = section_from_function(sup_family(5, 0.1), |_, s| s);
        let csv = u.norms_csv();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("t,norm\n0.1,1\n"));
    }
}
