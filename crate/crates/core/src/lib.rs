//! Calculus of sections valued in a monotone family of finite-dimensional
//! normed spaces: direct-integral norms, local Bochner integrals, minimal upper
//! gradients, weak derivatives and family isomorphisms, each paired with a
//! checker that reports residuals.

pub mod builders;
pub mod error;
pub mod family;
pub mod grid;
pub mod harness;
pub mod integral;
pub mod isomorphism;
pub mod norm;
pub mod report;
pub mod section;
pub mod sobolev;

pub use error::{Error, Result};
pub use family::{check_family, MonotoneFamily, Orientation, Transition};
pub use grid::TimeGrid;
pub use norm::{Exponent, NormKind, NormedNode};
pub use report::{Status, VerificationReport, Witness};
