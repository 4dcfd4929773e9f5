//! Suite and convergence-study configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::report::Status;

use super::io::{parse_json, read_text};

pub const DEFAULT_SEED: u64 = 42;
pub const SEED_ENV: &str = "MONOFAM_SEED";

/// Floating tolerances shared by every property.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Identities that hold up to rounding.
    pub exact: f64,
    /// Quantities compared through sums and solvers.
    pub quadrature: f64,
    /// Allowed deviation of a fitted convergence order.
    pub order: f64,
    /// Relative gap between the gradient and derivative norms.
    pub relative_gap: f64,
    /// Relative deviation allowed for constants that should be grid independent.
    pub stability: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            exact: 1e-12,
            quadrature: 1e-9,
            order: 0.3,
            relative_gap: 2e-2,
            stability: 0.1,
        }
    }
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn empty_params() -> Value {
    Value::Object(Default::default())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertySpec {
    /// Registered property name.
    pub name: String,
    /// Key in the report; defaults to `name`. Lets one property run with
    /// several parameter sets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default = "expected_pass")]
    pub expected: Status,
    #[serde(default = "empty_params")]
    pub params: Value,
}

fn expected_pass() -> Status {
    Status::Pass
}

impl PropertySpec {
    pub fn new(name: &str) -> Self {
        Self {
            name: name.into(),
            id: None,
            expected: Status::Pass,
            params: empty_params(),
        }
    }

    pub fn key(&self) -> &str {
        self.id.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Stamp wall-clock times on the reports (breaks byte-identical output).
    #[serde(default)]
    pub record_runtime: bool,
    /// Report path, relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub properties: Vec<PropertySpec>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            tolerances: Tolerances::default(),
            record_runtime: false,
            output: None,
            properties: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceConfig {
    pub metric: String,
    pub grids: Vec<usize>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    /// Path prefix; `.csv` and `.json` are appended. Relative to the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default = "empty_params")]
    pub params: Value,
}

/// Seed from the environment, if set.
pub fn seed_override() -> Result<Option<u64>> {
    match std::env::var(SEED_ENV) {
        Ok(s) => s
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::param(format!("{SEED_ENV}={s} is not an unsigned integer"))),
        Err(_) => Ok(None),
    }
}

/// Resolves `path` against the directory holding `config`.
pub fn resolve_relative(config: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        config.parent().unwrap_or(Path::new(".")).join(path)
    }
}

pub fn load_suite_config(path: &Path) -> Result<SuiteConfig> {
    parse_json(&read_text(path)?, &path.display().to_string())
}

pub fn load_convergence_config(path: &Path) -> Result<ConvergenceConfig> {
    parse_json(&read_text(path)?, &path.display().to_string())
}
