//! Standard families and sections shared by the suite, the convergence
//! studies and the examples.

use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;

use crate::builders::{self, LengthProfile};
use crate::error::{Error, Result};
use crate::family::{MonotoneFamily, Transition};
use crate::grid::TimeGrid;
use crate::norm::{Exponent, NormedNode};
use crate::section::{section_from_function, Section};

pub const BUILDER_NAMES: [&str; 4] = [
    "affine_composition",
    "nested_lq",
    "sup_counterexample",
    "weighted_hilbert",
];

pub fn unit_grid(n: usize) -> Result<TimeGrid> {
    TimeGrid::uniform(0.0, 1.0, n)
}

/// `L²(0, 1 - t/2)` sampled on `mesh` cells of `(0, 1)`.
pub fn shrinking_l2(n: usize, mesh: usize) -> Result<Arc<MonotoneFamily>> {
    let profile = LengthProfile::Affine {
        at_zero: 1.0,
        slope: -0.5,
    };
    Ok(Arc::new(builders::nested_lq(&profile, Exponent::TWO, mesh, unit_grid(n)?)?))
}

/// The same `L²(0, 1)` norm on `mesh` midpoint cells at every node.
pub fn constant_l2(n: usize, mesh: usize) -> Result<Arc<MonotoneFamily>> {
    if mesh == 0 {
        return Err(Error::param("mesh must be positive"));
    }
    let h = 1.0 / mesh as f64;
    let node = NormedNode::weighted_lq(Exponent::TWO, vec![h; mesh], vec![true; mesh])?;
    let coords: Vec<f64> = (0..mesh).map(|k| (k as f64 + 0.5) * h).collect();
    Ok(Arc::new(
        MonotoneFamily::constant("constant_l2", unit_grid(n)?, node).with_coords(vec![coords; n])?,
    ))
}

pub fn sup_family(n: usize, mesh: usize) -> Result<Arc<MonotoneFamily>> {
    Ok(Arc::new(builders::sup_counterexample(mesh, unit_grid(n)?)?))
}

/// One of [`BUILDER_NAMES`] on `n` cell-centred nodes of `(0, 1)`.
pub fn builder_family(name: &str, n: usize, mesh: usize) -> Result<Arc<MonotoneFamily>> {
    let grid = unit_grid(n)?;
    let family = match name {
        "nested_lq" => return shrinking_l2(n, mesh),
        "sup_counterexample" => builders::sup_counterexample(mesh, grid)?,
        "affine_composition" => builders::affine_composition(mesh, grid)?,
        "weighted_hilbert" => builders::weighted_hilbert(mesh, grid)?,
        other => {
            return Err(Error::Unknown {
                kind: "builder",
                name: other.into(),
                registered: BUILDER_NAMES.join(", "),
            })
        }
    };
    Ok(Arc::new(family))
}

/// `u(t, x) = sin(x) e^{-t}`.
pub fn smooth_section(family: Arc<MonotoneFamily>) -> Section {
    section_from_function(family, |t, x| x.sin() * (-t).exp())
}

/// `u(t)(s) = s` on the sup family.
pub fn counterexample_section(n: usize, mesh: usize) -> Result<Section> {
    Ok(section_from_function(sup_family(n, mesh)?, |_, s| s))
}

/// Random section with entries in `[-1, 1]` on the active coordinates.
pub fn random_section(family: Arc<MonotoneFamily>, rng: &mut impl Rng) -> Section {
    let values = (0..family.len()).map(|i| family.random_vector(i, rng)).collect();
    Section::from_parts(family, values)
}

/// Small family with random node times, random nonincreasing weights,
/// coordinates dropping out over time and a random section on it.
pub fn random_small_instance(rng: &mut impl Rng, n: usize, q: Exponent) -> Result<Section> {
    let dim = 4;
    let mut times: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..0.99)).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let grid = TimeGrid::new(0.0, 1.0, times)?;
    let mut weights = vec![1.0; dim];
    let mut mask = vec![true; dim];
    let mut nodes = Vec::with_capacity(grid.len());
    let mut adjacent = Vec::with_capacity(grid.len().saturating_sub(1));
    for i in 0..grid.len() {
        if i > 0 {
            let before = mask.clone();
            for (w, m) in weights.iter_mut().zip(mask.iter_mut()) {
                *w *= rng.gen_range(0.6..1.0);
                if *m && rng.gen_bool(0.1) {
                    *m = false;
                }
            }
            if mask.iter().all(|m| !m) {
                mask[0] = true;
            }
            let dropped = before.iter().zip(&mask).any(|(a, b)| *a && !*b);
            adjacent.push(if dropped {
                Transition::Mask(mask.clone())
            } else {
                Transition::Identity
            });
        }
        nodes.push(NormedNode::weighted_lq(q, weights.clone(), mask.clone())?);
    }
    let family = Arc::new(MonotoneFamily::new("random", grid, nodes, adjacent)?);
    let values: Vec<DVector<f64>> = (0..family.len()).map(|i| family.random_vector(i, rng)).collect();
    Section::new(family, values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::check_family;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_builder_name_resolves() {
        for name in BUILDER_NAMES {
            let fam = builder_family(name, 8, 16).unwrap();
            assert_eq!(fam.len(), 8);
        }
        assert!(matches!(builder_family("nope", 8, 16), Err(Error::Unknown { .. })));
    }

    #[test]
    fn counterexample_norms() {
        let u = counterexample_section(8, 64).unwrap();
        let norms = u.node_norms();
        assert_eq!(norms[0], 1.0);
        assert_eq!(norms[7], 0.5);
    }

    #[test]
    fn random_instances_are_families() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for q in [Exponent::ONE, Exponent::TWO, Exponent::INFINITY] {
            let u = random_small_instance(&mut rng, 8, q).unwrap();
            assert!(check_family(u.family(), 20, 0, 1e-12).passed());
        }
    }
}
