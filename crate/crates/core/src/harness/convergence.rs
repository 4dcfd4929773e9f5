//! Convergence studies: one metric evaluated over a sequence of grid sizes.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::isomorphism::{composition_blowup_demo, NamedWeight, WeightProfile};

use super::config::{load_convergence_config, resolve_relative, seed_override, ConvergenceConfig};
use super::io::{to_json_pretty, write_text};
use super::properties::{ftc_error_at, main1_gap_at, mh_error_at, weight_m_at};

pub const METRICS: [&str; 5] = ["M_stability", "blowup_ratio", "ftc_error", "main1_gap", "mh_error"];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub metric: String,
    pub grids: Vec<usize>,
    pub values: Vec<f64>,
    /// Least-squares exponent `r` in `value ∝ n^{-r}` for error metrics and
    /// `value ∝ n^{r}` for `blowup_ratio` and `M_stability`.
    pub fitted_order: f64,
}

impl ConvergenceStudy {
    pub fn to_csv(&self) -> String {
        let mut out = format!("n,{}\n", self.metric);
        for (n, v) in self.grids.iter().zip(&self.values) {
            out.push_str(&format!("{n},{v}\n"));
        }
        out
    }
}

#[derive(Deserialize)]
#[serde(default, deny_unknown_fields)]
struct StudyParams {
    mesh: Option<usize>,
    /// Averaging width of `mh_error` in cells.
    cells: usize,
    s: f64,
    t: f64,
    a: f64,
    exponent: f64,
    w: WeightProfile,
}

impl Default for StudyParams {
    fn default() -> Self {
        Self {
            mesh: None,
            cells: 4,
            s: 0.2,
            t: 0.201,
            a: 0.3,
            exponent: 2.0 / 3.0,
            w: WeightProfile::Named(NamedWeight::Affine),
        }
    }
}

pub fn run_convergence(config: &ConvergenceConfig) -> Result<ConvergenceStudy> {
    if !METRICS.contains(&config.metric.as_str()) {
        return Err(Error::Unknown {
            kind: "metric",
            name: config.metric.clone(),
            registered: METRICS.join(", "),
        });
    }
    let grids = &config.grids;
    if grids.len() < 2 || grids.windows(2).any(|w| w[0] >= w[1]) || grids[0] == 0 {
        return Err(Error::param("grids must be positive and strictly increasing, at least two"));
    }
    let p: StudyParams = match &config.params {
        serde_json::Value::Null => StudyParams::default(),
        v => serde_json::from_value(v.clone()).map_err(|e| Error::param(format!("params: {e}")))?,
    };
    let (values, growth): (Vec<f64>, bool) = match config.metric.as_str() {
        "main1_gap" => (
            grids.iter().map(|&n| main1_gap_at(n, p.mesh.unwrap_or(128))).collect::<Result<_>>()?,
            false,
        ),
        "ftc_error" => (
            grids.iter().map(|&n| ftc_error_at(n, p.mesh.unwrap_or(128))).collect::<Result<_>>()?,
            false,
        ),
        "mh_error" => (
            grids
                .iter()
                .map(|&n| mh_error_at(n, p.mesh.unwrap_or(128), p.cells))
                .collect::<Result<_>>()?,
            false,
        ),
        "M_stability" => (
            grids
                .iter()
                .map(|&n| weight_m_at(n, p.mesh.unwrap_or(16), &p.w, config.seed))
                .collect::<Result<_>>()?,
            true,
        ),
        "blowup_ratio" => {
            let table = composition_blowup_demo(grids, p.s, p.t, p.a, p.mesh.unwrap_or(8192), p.exponent)?;
            (table.rows.iter().map(|r| r.ratio).collect(), true)
        }
        _ => unreachable!("metric checked above"),
    };
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::param(format!("metric is not finite at n = {}", grids[bad])));
    }
    let rate = super::properties::fitted_order(grids, &values);
    Ok(ConvergenceStudy {
        metric: config.metric.clone(),
        grids: grids.clone(),
        values,
        fitted_order: if growth { -rate } else { rate },
    })
}

/// Loads `path`, applies the seed override, runs the study and writes
/// `<prefix>.csv` and `<prefix>.json` when an output prefix is configured.
pub fn run_convergence_file(path: &Path, output: Option<&Path>) -> Result<(ConvergenceStudy, Vec<PathBuf>)> {
    let mut config = load_convergence_config(path)?;
    if let Some(seed) = seed_override()? {
        config.seed = seed;
    }
    let study = run_convergence(&config)?;
    let prefix = match output {
        Some(p) => Some(p.to_path_buf()),
        None => config.output.as_deref().map(|p| resolve_relative(path, p)),
    };
    let mut written = Vec::new();
    if let Some(prefix) = prefix {
        let csv = prefix.with_extension("csv");
        let json = prefix.with_extension("json");
        write_text(&csv, &study.to_csv())?;
        write_text(&json, &to_json_pretty(&study))?;
        written = vec![csv, json];
    }
    Ok((study, written))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(metric: &str, grids: Vec<usize>) -> ConvergenceConfig {
        ConvergenceConfig {
            metric: metric.into(),
            grids,
            seed: 1,
            output: None,
            params: serde_json::Value::Null,
        }
    }

    #[test]
    fn unknown_metric_lists_registered() {
        let err = run_convergence(&config("speed", vec![8, 16])).unwrap_err();
        assert!(err.to_string().contains("main1_gap"));
    }

    #[test]
    fn grids_must_increase() {
        assert!(run_convergence(&config("ftc_error", vec![16, 8])).is_err());
    }

    #[test]
    fn mh_error_is_first_order() {
        let s = run_convergence(&config("mh_error", vec![32, 64, 128])).unwrap();
        assert!((s.fitted_order - 1.0).abs() < 0.3, "{s:?}");
    }

    #[test]
    fn weight_m_is_flat() {
        let s = run_convergence(&config("M_stability", vec![16, 32])).unwrap();
        assert!(s.fitted_order.abs() < 0.05, "{s:?}");
        assert!(s.to_csv().starts_with("n,M_stability\n16,"));
    }
}
