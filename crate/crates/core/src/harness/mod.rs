//! Suite runner, convergence studies, JSON interchange and fixtures behind
//! the `monofam` command line.

mod cauchy;
mod config;
mod convergence;
pub mod fixtures;
pub mod io;
mod properties;
mod suite;

pub use cauchy::{cauchy_completeness_probe, Generator};
pub use config::{
    load_convergence_config, load_suite_config, resolve_relative, seed_override, ConvergenceConfig,
    PropertySpec, SuiteConfig, Tolerances, DEFAULT_SEED, SEED_ENV,
};
pub use convergence::{run_convergence, run_convergence_file, ConvergenceStudy, METRICS};
pub use properties::{
    fitted_order, ftc_error_at, main1_gap_at, mh_error_at, property_names, run_property, weight_m_at,
    PropertyContext,
};
pub use suite::{run_suite, run_suite_file, PropertyOutcome, SuiteReport};
