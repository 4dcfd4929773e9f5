//! Upper gradients, weak derivatives and Sobolev-type norms of sections.

mod derivative;
mod gradient;
mod oracle;
mod scalar;

pub use derivative::{
    difference_quotient, ftc_reconstruct, integration_by_parts_residual, sobolev_norm,
    standard_bumps, weak_derivative, Bump, PartsResidual, QuotientSection, Reconstruction,
    SobolevNorm, BUMP_COUNT,
};
pub use gradient::{
    cell_lp_norm, minimal_upper_gradient, pair_increments, pair_residuals_csv,
    verify_upper_gradient, UpperGradient,
};
pub use oracle::{minimal_gradient_oracle, ORACLE_MAX_NODES};
pub use scalar::{frozen_norm_variation, reshetnyak_check, scalar_characterization_check};
