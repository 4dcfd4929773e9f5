//! Verification-suite runner.

use std::collections::BTreeSet;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::report::{Status, VerificationReport, Witness};

use super::config::{load_suite_config, resolve_relative, seed_override, PropertySpec, SuiteConfig, Tolerances};
use super::io::{to_json_pretty, write_text};
use super::properties::{property_names, run_property, PropertyContext};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyOutcome {
    pub id: String,
    pub expected: Status,
    pub matched: bool,
    pub report: VerificationReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub tolerances: Tolerances,
    pub all_matched: bool,
    pub properties: Vec<PropertyOutcome>,
}

impl SuiteReport {
    /// 0 when every property produced its expected status, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.all_matched {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        to_json_pretty(self)
    }

    /// One `id: status (expected ...)` line per property.
    pub fn summary(&self) -> String {
        self.properties
            .iter()
            .map(|o| {
                format!(
                    "{} {}: {} (expected {}, residual {:.3e})\n",
                    if o.matched { "ok  " } else { "FAIL" },
                    o.id,
                    o.report.status,
                    o.expected,
                    o.report.worst_residual
                )
            })
            .collect()
    }
}

fn panic_message(payload: Box<dyn std::any::Any + Send>) -> String {
    payload
        .downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| payload.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "unknown panic".into())
}

fn validate(config: &SuiteConfig) -> Result<()> {
    let registered = property_names();
    let mut seen = BTreeSet::new();
    for spec in &config.properties {
        if !registered.contains(&spec.name.as_str()) {
            return Err(Error::Unknown {
                kind: "property",
                name: spec.name.clone(),
                registered: registered.join(", "),
            });
        }
        if !seen.insert(spec.key()) {
            return Err(Error::param(format!("property id `{}` appears twice", spec.key())));
        }
    }
    Ok(())
}

fn run_one(spec: &PropertySpec, ctx: &PropertyContext, record_runtime: bool) -> PropertyOutcome {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| run_property(&spec.name, ctx, &spec.params)));
    let mut report = match outcome {
        Ok(Ok(r)) => r,
        Ok(Err(e)) => crashed(&spec.name, ctx, format!("error: {e}")),
        Err(payload) => crashed(&spec.name, ctx, format!("panic: {}", panic_message(payload))),
    };
    if record_runtime {
        report.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    }
    PropertyOutcome {
        id: spec.key().to_string(),
        expected: spec.expected,
        matched: report.status == spec.expected,
        report,
    }
}

fn crashed(name: &str, ctx: &PropertyContext, note: String) -> VerificationReport {
    VerificationReport::with_status(
        name,
        Status::Fail,
        f64::INFINITY,
        ctx.tolerances.exact,
        Some(Witness::new(Vec::new(), note)),
    )
}

/// Runs every configured property in parallel; outcomes are ordered by id.
/// Errors only for invalid configurations (unknown names, duplicate ids).
pub fn run_suite(config: &SuiteConfig) -> Result<SuiteReport> {
    validate(config)?;
    let ctx = PropertyContext {
        seed: config.seed,
        tolerances: config.tolerances,
    };
    let mut specs: Vec<&PropertySpec> = config.properties.iter().collect();
    specs.sort_by(|a, b| a.key().cmp(b.key()));
    let properties: Vec<PropertyOutcome> = specs
        .par_iter()
        .map(|spec| run_one(spec, &ctx, config.record_runtime))
        .collect();
    Ok(SuiteReport {
        seed: config.seed,
        tolerances: config.tolerances,
        all_matched: properties.iter().all(|o| o.matched),
        properties,
    })
}

/// Loads `path`, applies the seed override from the environment, runs the
/// suite and writes the report to `output` (or the configured path).
/// Returns the report and the path written, if any.
pub fn run_suite_file(path: &Path, output: Option<&Path>) -> Result<(SuiteReport, Option<PathBuf>)> {
    let mut config = load_suite_config(path)?;
    if let Some(seed) = seed_override()? {
        config.seed = seed;
    }
    let report = run_suite(&config)?;
    let target = match output {
        Some(p) => Some(p.to_path_buf()),
        None => config.output.as_deref().map(|p| resolve_relative(path, p)),
    };
    if let Some(t) = &target {
        write_text(t, &report.to_json())?;
    }
    Ok((report, target))
}
