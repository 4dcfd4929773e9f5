use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    #[serde(alias = "hypothesis-violated")]
    HypothesisViolated,
    Divergent,
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::HypothesisViolated => "hypothesis-violated",
            Status::Divergent => "divergent",
        })
    }
}

/// Where a check went wrong: node or cell indices plus a short note.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub indices: Vec<usize>,
    pub note: String,
}

impl Witness {
    pub fn new(indices: Vec<usize>, note: impl Into<String>) -> Self {
        Self {
            indices,
            note: note.into(),
        }
    }
}

/// Outcome of one property check.
///
/// `Pass` implies `worst_residual <= tolerance`; `Fail` always carries a witness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub property_name: String,
    pub status: Status,
    pub worst_residual: f64,
    pub tolerance: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Witness>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runtime_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
}

impl VerificationReport {
    /// Pass when `residual <= tolerance`, otherwise fail with `witness`.
    pub fn from_residual(
        name: impl Into<String>,
        residual: f64,
        tolerance: f64,
        witness: Option<Witness>,
    ) -> Self {
        let pass = residual <= tolerance;
        let witness = if pass {
            witness
        } else {
            Some(witness.unwrap_or_else(|| Witness::new(Vec::new(), "no witness recorded")))
        };
        Self {
            property_name: name.into(),
            status: if pass { Status::Pass } else { Status::Fail },
            worst_residual: residual,
            tolerance,
            witness,
            runtime_ms: None,
            metrics: BTreeMap::new(),
        }
    }

    pub fn with_status(
        name: impl Into<String>,
        status: Status,
        residual: f64,
        tolerance: f64,
        witness: Option<Witness>,
    ) -> Self {
        let mut r = Self::from_residual(name, residual, tolerance, witness);
        r.status = status;
        if status == Status::Fail && r.witness.is_none() {
            r.witness = Some(Witness::new(Vec::new(), "no witness recorded"));
        }
        r
    }

    pub fn metric(mut self, key: &str, value: f64) -> Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.property_name = name.into();
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

/// Runs `f` and stamps the elapsed wall time on the report.
pub fn timed(f: impl FnOnce() -> VerificationReport) -> VerificationReport {
    let start = Instant::now();
    let mut report = f();
    report.runtime_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    report
}
