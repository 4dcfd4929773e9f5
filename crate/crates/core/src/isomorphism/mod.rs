//! Edge spaces, isomorphisms onto a fixed reference space and the constants
//! controlling whether they lift to Sobolev sections.

mod blowup;
mod criterion;
mod edge;
mod iso;
mod operator;

pub use blowup::{composition_blowup_demo, smooth_step, BlowupRow, BlowupTable, CuspProfile, MESH_PER_N};
pub use criterion::{
    difference_quotient_criterion, holder_half_path, shift_constants, ShiftFit, DIVERGENCE_SLOPE,
    SHIFTS,
};
pub(crate) use criterion::log_slope;
pub use edge::{edge_spaces, embed_from_x0, project_to_xt, x0_family, xt_family, EdgeSpaces};
pub use iso::{
    estimate_m, lift_bound_check, lift_section, sampled_pairs, FamilyIsomorphism,
    IsomorphismReport, NamedWeight, PairRatio, ReferenceNode, WeightProfile,
};
pub use operator::{estimate_operator_norm, sampled_operator_norm, OperatorNorm};
