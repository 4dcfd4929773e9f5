use std::fmt::Write as _;
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::operator::estimate_operator_norm;
use crate::builders::affine_node;
use crate::error::{Error, Result};
use crate::family::MonotoneFamily;
use crate::grid::TimeGrid;
use crate::norm::{Exponent, NormedNode};
use crate::report::{VerificationReport, Witness};
use crate::section::Section;
use crate::sobolev::{cell_lp_norm, minimal_upper_gradient};

/// Random directions per operator norm when no exact path exists.
const OPERATOR_SAMPLES: usize = 64;

/// Which node norm the fixed reference space copies.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceNode {
    First,
    #[default]
    Last,
}

/// Scalar weight `w(t)` for [`FamilyIsomorphism::weight`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WeightProfile {
    Named(NamedWeight),
    Samples(Vec<f64>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedWeight {
    /// `1 + t/2`.
    Affine,
    /// `1` before `t = 1/2`, `3/2` from there on.
    Step,
}

impl WeightProfile {
    pub fn values(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            WeightProfile::Named(NamedWeight::Affine) => {
                Ok(grid.nodes().iter().map(|t| 1.0 + 0.5 * t).collect())
            }
            WeightProfile::Named(NamedWeight::Step) => Ok(grid
                .nodes()
                .iter()
                .map(|&t| if t < 0.5 { 1.0 } else { 1.5 })
                .collect()),
            WeightProfile::Samples(w) if w.len() == grid.len() => Ok(w.clone()),
            WeightProfile::Samples(w) => Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: w.len(),
            }),
        }
    }
}

/// Per-node invertible maps `Φ_i : X_{t_i} → Y` into one fixed space.
#[derive(Clone, Debug)]
pub struct FamilyIsomorphism {
    pub label: String,
    pub reference: NormedNode,
    pub maps: Vec<DMatrix<f64>>,
    pub inverse_maps: Vec<DMatrix<f64>>,
    /// `‖Φ_i‖`.
    pub forward_bounds: Vec<f64>,
    /// `‖Φ_i⁻¹‖`.
    pub inverse_bounds: Vec<f64>,
    reference_family: Arc<MonotoneFamily>,
}

impl FamilyIsomorphism {
    pub fn new(
        label: impl Into<String>,
        family: &MonotoneFamily,
        reference: NormedNode,
        maps: Vec<DMatrix<f64>>,
        inverse_maps: Vec<DMatrix<f64>>,
        seed: u64,
    ) -> Result<Self> {
        let n = family.len();
        if maps.len() != n || inverse_maps.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: maps.len().min(inverse_maps.len()),
            });
        }
        let dy = reference.dim();
        for i in 0..n {
            let (phi, inv) = (&maps[i], &inverse_maps[i]);
            if phi.shape() != (dy, family.dim(i)) || inv.shape() != (family.dim(i), dy) {
                return Err(Error::param(format!("map shapes at node {i} do not fit")));
            }
            let residual = (phi * inv - DMatrix::identity(dy, dy)).amax();
            if residual > 1e-12 {
                return Err(Error::param(format!(
                    "map at node {i} is not inverted by its partner (residual {residual:.2e})"
                )));
            }
        }
        let bounds: Vec<(f64, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let s = seed.wrapping_add(i as u64);
                let fwd = estimate_operator_norm(&maps[i], family.node(i), &reference, OPERATOR_SAMPLES, s)?;
                let inv = estimate_operator_norm(
                    &inverse_maps[i],
                    &reference,
                    family.node(i),
                    OPERATOR_SAMPLES,
                    s ^ 0x9e37_79b9,
                )?;
                Ok((fwd.value, inv.value))
            })
            .collect::<Result<_>>()?;
        let reference_family = Arc::new(MonotoneFamily::constant(
            "reference",
            family.grid().clone(),
            reference.clone(),
        ));
        Ok(Self {
            label: label.into(),
            reference,
            maps,
            inverse_maps,
            forward_bounds: bounds.iter().map(|b| b.0).collect(),
            inverse_bounds: bounds.iter().map(|b| b.1).collect(),
            reference_family,
        })
    }

    fn same_dims(family: &MonotoneFamily) -> Result<usize> {
        let d = family.dim(0);
        if (0..family.len()).any(|i| family.dim(i) != d) {
            return Err(Error::param(
                "this isomorphism needs equal dimensions at every node",
            ));
        }
        Ok(d)
    }

    fn pick_reference(family: &MonotoneFamily, which: ReferenceNode) -> NormedNode {
        match which {
            ReferenceNode::First => family.node(0).clone(),
            ReferenceNode::Last => family.node(family.len() - 1).clone(),
        }
    }

    /// `Φ_i = id` into a copy of the first or last node space.
    pub fn identity(family: &MonotoneFamily, reference: ReferenceNode, seed: u64) -> Result<Self> {
        let d = Self::same_dims(family)?;
        let id = vec![DMatrix::identity(d, d); family.len()];
        Self::new(
            "identity",
            family,
            Self::pick_reference(family, reference),
            id.clone(),
            id,
            seed,
        )
    }

    /// `Φ_i = w(t_i) · id`.
    pub fn weight(
        family: &MonotoneFamily,
        weights: &[f64],
        reference: ReferenceNode,
        seed: u64,
    ) -> Result<Self> {
        let d = Self::same_dims(family)?;
        if weights.len() != family.len() {
            return Err(Error::DimensionMismatch {
                expected: family.len(),
                found: weights.len(),
            });
        }
        if weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::param("weights must be positive and finite"));
        }
        let id = DMatrix::<f64>::identity(d, d);
        Self::new(
            "weight",
            family,
            Self::pick_reference(family, reference),
            weights.iter().map(|w| &id * *w).collect(),
            weights.iter().map(|w| &id / *w).collect(),
            seed,
        )
    }

    /// For the pulled-back affine family: vectors already live on the
    /// reference mesh, so `Φ_t` is the identity into `H¹₀(0,1)`.
    pub fn affine_composition(family: &MonotoneFamily, seed: u64) -> Result<Self> {
        let d = Self::same_dims(family)?;
        let id = vec![DMatrix::identity(d, d); family.len()];
        Self::new("affine_composition", family, affine_node(d, 1.0)?, id.clone(), id, seed)
    }

    pub fn len(&self) -> usize {
        self.maps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.maps.is_empty()
    }

    /// Constant family carrying the reference norm on the family's grid.
    pub fn reference_family(&self) -> &Arc<MonotoneFamily> {
        &self.reference_family
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairRatio {
    pub s: usize,
    pub t: usize,
    /// `‖Φ_t P(s,t) - Φ_s‖ / (t - s)`.
    pub forward: f64,
    /// `‖Φ_t⁻¹ - P(s,t) Φ_s⁻¹‖ / (t - s)`.
    pub inverse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsomorphismReport {
    pub sup_forward: f64,
    pub sup_inverse: f64,
    #[serde(rename = "M_forward")]
    pub m_forward: f64,
    #[serde(rename = "M_inverse")]
    pub m_inverse: f64,
    /// Whether every operator norm came from the exact path.
    pub exact: bool,
    pub per_pair_ratios: Vec<PairRatio>,
}

impl IsomorphismReport {
    /// Rows `s,t,forward_ratio,inverse_ratio` with node times.
    pub fn to_csv(&self, grid: &TimeGrid) -> String {
        let mut out = String::from("s,t,forward_ratio,inverse_ratio\n");
        for r in &self.per_pair_ratios {
            writeln!(out, "{},{},{},{}", grid.node(r.s), grid.node(r.t), r.forward, r.inverse)
                .expect("string write");
        }
        out
    }
}

/// Node pairs examined by [`estimate_m`]: every adjacent pair plus
/// `⌈n ln n⌉` random pairs at least two cells apart, sorted and deduplicated.
pub fn sampled_pairs(n: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut pairs: Vec<(usize, usize)> = (0..n.saturating_sub(1)).map(|k| (k, k + 1)).collect();
    if n >= 3 {
        let count = (n as f64 * (n as f64).ln()).ceil() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..count {
            let s = rng.gen_range(0..n - 2);
            let t = rng.gen_range(s + 2..n);
            pairs.push((s, t));
        }
    }
    pairs.sort_unstable();
    pairs.dedup();
    pairs
}

/// Lipschitz-type compatibility constants between the maps and the family's
/// transitions, maximised over [`sampled_pairs`].
pub fn estimate_m(
    family: &MonotoneFamily,
    iso: &FamilyIsomorphism,
    seed: u64,
) -> Result<IsomorphismReport> {
    if iso.len() != family.len() {
        return Err(Error::DimensionMismatch {
            expected: family.len(),
            found: iso.len(),
        });
    }
    let grid = family.grid();
    let pairs = sampled_pairs(family.len(), seed);
    let results: Vec<(PairRatio, bool)> = pairs
        .par_iter()
        .enumerate()
        .map(|(idx, &(s, t))| {
            let p = family.transition_matrix(s, t)?;
            let forward = &iso.maps[t] * &p - &iso.maps[s];
            let inverse = &iso.inverse_maps[t] - &p * &iso.inverse_maps[s];
            let pair_seed = seed.wrapping_mul(0x1000_0000_01b3).wrapping_add(idx as u64);
            let f = estimate_operator_norm(&forward, family.node(s), &iso.reference, OPERATOR_SAMPLES, pair_seed)?;
            let g = estimate_operator_norm(
                &inverse,
                &iso.reference,
                family.node(t),
                OPERATOR_SAMPLES,
                pair_seed ^ 0x5851_f42d,
            )?;
            let dt = grid.node(t) - grid.node(s);
            Ok((
                PairRatio {
                    s,
                    t,
                    forward: f.value / dt,
                    inverse: g.value / dt,
                },
                f.exact && g.exact,
            ))
        })
        .collect::<Result<_>>()?;
    let per_pair_ratios: Vec<PairRatio> = results.iter().map(|r| r.0).collect();
    let max = |xs: &[f64]| xs.iter().copied().fold(0.0, f64::max);
    Ok(IsomorphismReport {
        sup_forward: max(&iso.forward_bounds),
        sup_inverse: max(&iso.inverse_bounds),
        m_forward: per_pair_ratios.iter().map(|r| r.forward).fold(0.0, f64::max),
        m_inverse: per_pair_ratios.iter().map(|r| r.inverse).fold(0.0, f64::max),
        exact: results.iter().all(|r| r.1),
        per_pair_ratios,
    })
}

/// `t ↦ Φ_t u(t)`, a section of the reference family.
pub fn lift_section(iso: &FamilyIsomorphism, u: &Section) -> Result<Section> {
    if iso.len() != u.len() {
        return Err(Error::DimensionMismatch {
            expected: iso.len(),
            found: u.len(),
        });
    }
    let values = u
        .values()
        .iter()
        .zip(&iso.maps)
        .map(|(v, phi)| phi * v)
        .collect();
    Section::new(iso.reference_family.clone(), values)
}

/// Checks that the minimal gradient of the lifted section is at most
/// `sup_forward · ‖g_u‖_p + M_forward · ‖(‖u(t_k)‖)_k‖_p`, the per-cell
/// estimate `‖Φ_{k+1} u_{k+1} - Φ_k u_k‖ ≤ C_{k+1} d_k + M Δt_k ‖u_k‖`
/// summed in `L^p`.
pub fn lift_bound_check(
    iso: &FamilyIsomorphism,
    u: &Section,
    report: &IsomorphismReport,
    p: Exponent,
    tolerance: f64,
) -> Result<VerificationReport> {
    let lifted = lift_section(iso, u)?;
    let lhs = minimal_upper_gradient(&lifted, p).lp_norm;
    let g_u = minimal_upper_gradient(u, p).lp_norm;
    let norms = u.node_norms();
    let left = &norms[..norms.len().saturating_sub(1)];
    let u_cells = cell_lp_norm(u.grid(), left, p);
    let rhs = report.sup_forward * g_u + report.m_forward * u_cells;
    let excess = lhs - rhs;
    let witness = (excess > tolerance).then(|| {
        Witness::new(
            Vec::new(),
            format!("lifted gradient {lhs:.6e} exceeds bound {rhs:.6e}"),
        )
    });
    Ok(
        VerificationReport::from_residual("lift_bound", excess.max(0.0), tolerance, witness)
            .metric("lifted_gradient", lhs)
            .metric("bound", rhs),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::affine_composition;
    use crate::section::section_from_function;

    fn constant_family(n: usize) -> MonotoneFamily {
        let g = TimeGrid::uniform(0.0, 1.0, n).unwrap();
        MonotoneFamily::constant("l2", g, NormedNode::euclidean(4))
            .with_coords(vec![vec![0.1, 0.4, 0.6, 0.9]; n])
            .unwrap()
    }

    #[test]
    fn identity_on_constant_family() {
        let fam = constant_family(16);
        let iso = FamilyIsomorphism::identity(&fam, ReferenceNode::Last, 1).unwrap();
        let r = estimate_m(&fam, &iso, 1).unwrap();
        assert_eq!(r.m_forward, 0.0);
        assert_eq!(r.m_inverse, 0.0);
        assert!(r.exact);
        let fam = Arc::new(fam);
        let u = section_from_function(fam, |t, x| t * x);
        let lifted = lift_section(&iso, &u).unwrap();
        assert_eq!(lifted.values(), u.values());
    }

    #[test]
    fn affine_weight_gives_half() {
        for n in [32, 64] {
            let fam = constant_family(n);
            let w = WeightProfile::Named(NamedWeight::Affine)
                .values(fam.grid())
                .unwrap();
            let iso = FamilyIsomorphism::weight(&fam, &w, ReferenceNode::Last, 3).unwrap();
            let r = estimate_m(&fam, &iso, 3).unwrap();
            assert!((r.m_forward - 0.5).abs() < 1e-9, "{}", r.m_forward);
            assert!(r.per_pair_ratios.iter().all(|p| p.forward <= r.m_forward));
            assert!((r.sup_forward - w[n - 1]).abs() < 1e-12);
        }
    }

    #[test]
    fn step_weight_ratio_doubles() {
        let ratio = |n| {
            let fam = constant_family(n);
            let w = WeightProfile::Named(NamedWeight::Step).values(fam.grid()).unwrap();
            let iso = FamilyIsomorphism::weight(&fam, &w, ReferenceNode::First, 3).unwrap();
            estimate_m(&fam, &iso, 3).unwrap().m_forward
        };
        let growth = ratio(64) / ratio(32);
        assert!((growth - 2.0).abs() < 0.2, "{growth}");
    }

    #[test]
    fn lift_bound_holds_for_weight() {
        let fam = constant_family(256);
        let w = WeightProfile::Named(NamedWeight::Affine).values(fam.grid()).unwrap();
        let iso = FamilyIsomorphism::weight(&fam, &w, ReferenceNode::Last, 3).unwrap();
        let report = estimate_m(&fam, &iso, 3).unwrap();
        let u = section_from_function(Arc::new(fam), |t, x| (t * 3.0 + x).sin());
        let r = lift_bound_check(&iso, &u, &report, Exponent::TWO, 1e-12).unwrap();
        assert!(r.passed(), "{r:?}");
        assert!(r.metrics["lifted_gradient"] < r.metrics["bound"]);
        let z = lift_section(&iso, &Section::zero(u.family().clone())).unwrap();
        assert!(z.values().iter().all(|v| v.amax() == 0.0));
    }

    #[test]
    fn affine_family_identity_maps() {
        let g = TimeGrid::uniform(0.0, 1.0, 12).unwrap();
        let fam = affine_composition(32, g).unwrap();
        let iso = FamilyIsomorphism::affine_composition(&fam, 0).unwrap();
        // ‖v‖_Y ≤ ‖v‖_t for a ≤ 1 by the discrete Poincaré inequality.
        assert!(iso.forward_bounds.iter().all(|c| *c <= 1.0 + 1e-12));
        assert!(iso.inverse_bounds.iter().all(|c| *c >= 1.0));
        let r = estimate_m(&fam, &iso, 0).unwrap();
        assert_eq!(r.m_forward, 0.0);
    }

    #[test]
    fn bad_inverse_rejected() {
        let fam = constant_family(3);
        let id = DMatrix::<f64>::identity(4, 4);
        let err = FamilyIsomorphism::new(
            "bad",
            &fam,
            NormedNode::euclidean(4),
            vec![id.clone(); 3],
            vec![&id * 2.0; 3],
            0,
        );
        assert!(err.is_err());
    }

    #[test]
    fn pairs_cover_all_adjacent() {
        let pairs = sampled_pairs(10, 1);
        for k in 0..9 {
            assert!(pairs.contains(&(k, k + 1)));
        }
        assert!(pairs.windows(2).all(|w| w[0] < w[1]));
        assert!(pairs.iter().all(|&(s, t)| s < t && t < 10));
    }
}
