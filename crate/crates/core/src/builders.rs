//! Ready-made monotone families on a one-dimensional spatial mesh.

use nalgebra::DMatrix;
#[cfg(test)]
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::family::{MonotoneFamily, Orientation, Transition};
use crate::grid::TimeGrid;
use crate::norm::{Exponent, NormKind, NormedNode};

/// Length `L(t)` of the domain `(0, L(t))` at each node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthProfile {
    /// `L(t) = at_zero + slope * t`.
    Affine { at_zero: f64, slope: f64 },
    /// One length per grid node.
    Values(Vec<f64>),
}

impl LengthProfile {
    pub fn lengths(&self, grid: &TimeGrid) -> Result<Vec<f64>> {
        match self {
            LengthProfile::Affine { at_zero, slope } => {
                Ok(grid.nodes().iter().map(|t| at_zero + slope * t).collect())
            }
            LengthProfile::Values(v) if v.len() == grid.len() => Ok(v.clone()),
            LengthProfile::Values(v) => Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: v.len(),
            }),
        }
    }
}

/// Discrete `L^q(0, L(t))` on a uniform mesh of `(0, L(t_0))`.
///
/// Cell `k` carries weight `|cell_k ∩ (0, L(t))|`, so partially covered cells
/// count with their covered length. For `q = ∞` a cell counts as soon as it
/// meets the domain. Transitions zero out cells that left the domain.
pub fn nested_lq(
    profile: &LengthProfile,
    q: Exponent,
    mesh: usize,
    grid: TimeGrid,
) -> Result<MonotoneFamily> {
    let lengths = profile.lengths(&grid)?;
    nested_lq_with_lengths(&lengths, q, mesh, grid)
}

pub fn nested_lq_with_lengths(
    lengths: &[f64],
    q: Exponent,
    mesh: usize,
    grid: TimeGrid,
) -> Result<MonotoneFamily> {
    if mesh == 0 {
        return Err(Error::param("mesh must be positive"));
    }
    if lengths.len() != grid.len() {
        return Err(Error::DimensionMismatch {
            expected: grid.len(),
            found: lengths.len(),
        });
    }
    if let Some(i) = lengths.iter().position(|l| !(l.is_finite() && *l > 0.0)) {
        return Err(Error::param(format!(
            "domain length {} at node {i} is not positive",
            lengths[i]
        )));
    }
    for (k, w) in lengths.windows(2).enumerate() {
        if w[1] > w[0] {
            return Err(Error::Monotonicity {
                earlier: k,
                later: k + 1,
                detail: format!("domain grows from {} to {}", w[0], w[1]),
            });
        }
    }
    let h = lengths[0] / mesh as f64;
    let coords: Vec<f64> = (0..mesh).map(|k| (k as f64 + 0.5) * h).collect();
    let nodes: Vec<NormedNode> = lengths
        .iter()
        .map(|&len| {
            let weights: Vec<f64> = (0..mesh)
                .map(|k| {
                    let covered = (len - k as f64 * h).clamp(0.0, h);
                    if q.is_infinite() {
                        if covered > 0.0 {
                            1.0
                        } else {
                            0.0
                        }
                    } else {
                        covered
                    }
                })
                .collect();
            let mask = weights.iter().map(|w| *w > 0.0).collect();
            NormedNode::weighted_lq(q, weights, mask)
        })
        .collect::<Result<_>>()?;
    let adjacent = nodes
        .windows(2)
        .map(|w| {
            let keep: Vec<bool> = (0..mesh).map(|k| w[1].is_active(k)).collect();
            let same = (0..mesh).all(|k| w[0].is_active(k) == keep[k]);
            if same {
                Transition::Identity
            } else {
                Transition::Mask(keep)
            }
        })
        .collect();
    let label = format!("nested_l{}", q);
    MonotoneFamily::new(label, grid.clone(), nodes, adjacent)?
        .with_coords(vec![coords; grid.len()])
}

/// Discrete sup norm over `(0,1)` before `t = 1/2` and over `(0,1/2]` after,
/// sampled at `s_k = k/mesh`, `k = 1..=mesh`.
pub fn sup_counterexample(mesh: usize, grid: TimeGrid) -> Result<MonotoneFamily> {
    if mesh < 2 {
        return Err(Error::param("mesh must be at least 2"));
    }
    check_unit_interval(&grid)?;
    let coords: Vec<f64> = (1..=mesh).map(|k| k as f64 / mesh as f64).collect();
    let late_mask: Vec<bool> = coords.iter().map(|&s| s <= 0.5).collect();
    let nodes: Vec<NormedNode> = grid
        .nodes()
        .iter()
        .map(|&t| {
            let mask = if t < 0.5 {
                vec![true; mesh]
            } else {
                late_mask.clone()
            };
            NormedNode::new(mesh, NormKind::DiscreteSup { mask })
        })
        .collect::<Result<_>>()?;
    let adjacent = grid
        .nodes()
        .windows(2)
        .map(|w| {
            if w[0] < 0.5 && w[1] >= 0.5 {
                Transition::Mask(late_mask.clone())
            } else {
                Transition::Identity
            }
        })
        .collect();
    MonotoneFamily::new("sup_counterexample", grid.clone(), nodes, adjacent)?
        .with_coords(vec![coords; grid.len()])
}

/// `φ(t, x) = (1 + t) x / 2`, mapping `(0,1)` onto `(0, 1/2 + t/2)`.
pub fn affine_map(t: f64, x: f64) -> f64 {
    0.5 * (1.0 + t) * x
}

/// `H¹₀(0, (1+t)/2)` pulled back to the reference interval `(0,1)` through
/// [`affine_map`], discretised on `mesh` interior points.
///
/// With `a = (1+t)/2` the pulled-back norm is `a‖v‖² + ‖v'‖²/a`, which is
/// non-increasing in `a` whenever `‖v'‖ ≥ ‖v‖` (always true on `H¹₀(0,1)`).
/// The norms therefore already shrink as `t` grows and the family is stored
/// with forward orientation; transitions are identities.
pub fn affine_composition(mesh: usize, grid: TimeGrid) -> Result<MonotoneFamily> {
    if mesh == 0 {
        return Err(Error::param("mesh must be positive"));
    }
    check_unit_interval(&grid)?;
    let h = 1.0 / (mesh as f64 + 1.0);
    let coords: Vec<f64> = (1..=mesh).map(|k| k as f64 * h).collect();
    let nodes: Vec<NormedNode> = grid
        .nodes()
        .iter()
        .map(|&t| affine_node(mesh, 0.5 * (1.0 + t)))
        .collect::<Result<_>>()?;
    let n = grid.len();
    MonotoneFamily::new(
        "affine_composition",
        grid.clone(),
        nodes,
        vec![Transition::Identity; n - 1],
    )?
    .with_coords(vec![coords; n])
}

/// Pulled-back `H¹₀(0, a)` norm on the reference mesh.
pub fn affine_node(mesh: usize, a: f64) -> Result<NormedNode> {
    NormedNode::new(
        mesh,
        NormKind::DiscreteH1 {
            h: 1.0 / (mesh as f64 + 1.0),
            l2_weight: a,
            grad_weight: 1.0 / a,
        },
    )
}

/// `H¹₀` norms of the orthogonal projections onto functions supported in a
/// growing interval `(0, (1+r)/2)`, `r ∈ (0,1)`.
///
/// The norms grow with the interval, so the family is stored in reversed
/// orientation: stored time `τ` corresponds to `r = (t_end - τ)/(t_end - t_start)`
/// and the interval shrinks along the stored grid. Node `i` keeps the mesh
/// points inside its interval; transitions are the `H¹₀` orthogonal
/// projections onto the smaller subspace.
pub fn weighted_hilbert(mesh: usize, grid: TimeGrid) -> Result<MonotoneFamily> {
    if mesh == 0 {
        return Err(Error::param("mesh must be positive"));
    }
    let h = 1.0 / (mesh as f64 + 1.0);
    let span = grid.t_end() - grid.t_start();
    let dims: Vec<usize> = grid
        .nodes()
        .iter()
        .map(|&tau| {
            let r = (grid.t_end() - tau) / span;
            let len = 0.5 * (1.0 + r);
            (1..=mesh).filter(|&k| (k as f64) * h < len).count().max(1)
        })
        .collect();
    let nodes: Vec<NormedNode> = dims
        .iter()
        .map(|&d| {
            NormedNode::new(
                d,
                NormKind::DiscreteH1 {
                    h,
                    l2_weight: 1.0,
                    grad_weight: 1.0,
                },
            )
        })
        .collect::<Result<_>>()?;
    let adjacent = dims
        .windows(2)
        .map(|w| {
            if w[0] == w[1] {
                Transition::Identity
            } else {
                Transition::Dense(h1_projection(w[0], w[1], h))
            }
        })
        .collect();
    let coords = dims
        .iter()
        .map(|&d| (1..=d).map(|k| k as f64 * h).collect())
        .collect();
    Ok(
        MonotoneFamily::new("weighted_hilbert", grid, nodes, adjacent)?
            .with_coords(coords)?
            .with_orientation(Orientation::Reversed),
    )
}

/// Orthogonal projection, in the discrete `H¹₀` inner product, from vectors on
/// the first `from` mesh points onto vectors on the first `to` points.
fn h1_projection(from: usize, to: usize, h: f64) -> DMatrix<f64> {
    let gram = |i: usize, j: usize| {
        if i == j {
            h + 2.0 / h
        } else if i.abs_diff(j) == 1 {
            -1.0 / h
        } else {
            0.0
        }
    };
    let g11 = DMatrix::from_fn(to, to, gram);
    let g1 = DMatrix::from_fn(to, from, gram);
    let chol = g11.cholesky().expect("H1 gram matrix is positive definite");
    chol.solve(&g1)
}

fn check_unit_interval(grid: &TimeGrid) -> Result<()> {
    let first = grid.node(0);
    let last = grid.node(grid.len() - 1);
    if first <= 0.0 || last >= 1.0 {
        return Err(Error::InvalidGrid(format!(
            "nodes must lie inside (0,1), got [{first}, {last}]"
        )));
    }
    Ok(())
}

/// Node norms of the reference hat function `1 - |2x - 1|` under
/// [`affine_composition`], in closed form: `sqrt(4/a + a/3)` with `a = (1+t)/2`.
pub fn hat_norm_closed_form(t: f64) -> f64 {
    let a = 0.5 * (1.0 + t);
    (4.0 / a + a / 3.0).sqrt()
}

#[cfg(test)]
pub(crate) fn sample_vector(family: &MonotoneFamily, node: usize, f: impl Fn(f64) -> f64) -> DVector<f64> {
    DVector::from_iterator(family.dim(node), family.coords(node).iter().map(|&x| f(x)))
}
