use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::family::MonotoneFamily;
use crate::norm::NormedNode;
use crate::section::Section;

/// Norms standing in for the limits of the family at both ends of the interval.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeSpaces {
    pub x0: NormedNode,
    pub x_t: NormedNode,
    pub extrapolation_note: String,
}

/// First and last node norms. These are only the grid's closest stand-ins for
/// the one-sided limits; a limit norm may degenerate in ways no grid shows.
pub fn edge_spaces(family: &MonotoneFamily) -> EdgeSpaces {
    let grid = family.grid();
    EdgeSpaces {
        x0: family.node(0).clone(),
        x_t: family.node(family.len() - 1).clone(),
        extrapolation_note: format!(
            "first node t = {} and last node t = {} stand in for the limits at {} and {}",
            grid.node(0),
            grid.node(grid.len() - 1),
            grid.t_start(),
            grid.t_end()
        ),
    }
}

/// Constant family carrying the first node's norm at every node.
pub fn x0_family(family: &MonotoneFamily) -> Arc<MonotoneFamily> {
    Arc::new(MonotoneFamily::constant(
        format!("{}:x0", family.label()),
        family.grid().clone(),
        family.node(0).clone(),
    ))
}

/// Constant family carrying the last node's norm at every node.
pub fn xt_family(family: &MonotoneFamily) -> Arc<MonotoneFamily> {
    Arc::new(MonotoneFamily::constant(
        format!("{}:xT", family.label()),
        family.grid().clone(),
        family.node(family.len() - 1).clone(),
    ))
}

/// `u(t) ↦ P(t_0, t) u(t)` for a section valued in the first node's space.
pub fn embed_from_x0(family: Arc<MonotoneFamily>, u0: &Section) -> Result<Section> {
    if u0.len() != family.len() || u0.grid() != family.grid() {
        return Err(Error::FamilyMismatch(
            u0.family().label().to_string(),
            family.label().to_string(),
        ));
    }
    let d0 = family.dim(0);
    let values = u0
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| {
            if v.len() != d0 {
                return Err(Error::DimensionMismatch {
                    expected: d0,
                    found: v.len(),
                });
            }
            Ok(family.push(0, i, v))
        })
        .collect::<Result<Vec<_>>>()?;
    Section::new(family, values)
}

/// `u(t) ↦ P(t, t_last) u(t)`, a section of the constant last-node family.
pub fn project_to_xt(u: &Section) -> Section {
    let family = u.family();
    let last = family.len() - 1;
    let values = u
        .values()
        .iter()
        .enumerate()
        .map(|(i, v)| family.push(i, last, v))
        .collect();
    Section::new(xt_family(family), values).expect("pushed values live in the last node")
}
