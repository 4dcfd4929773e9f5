//! Runs a small suite and two convergence studies in-process.

use monofam::harness::{run_convergence, run_suite, ConvergenceConfig, PropertySpec, SuiteConfig};
use monofam::{Result, Status};
use serde_json::json;

fn main() -> Result<()> {
    let mut scalar = PropertySpec::new("counterexample_scalar");
    scalar.expected = Status::HypothesisViolated;
    let config = SuiteConfig {
        properties: vec![
            PropertySpec::new("oracle_equivalence"),
            PropertySpec::new("bochner_inequality"),
            PropertySpec::new("cauchy_completeness"),
            scalar,
        ],
        ..SuiteConfig::default()
    };
    let report = run_suite(&config)?;
    print!("{}", report.summary());
    println!("exit code {}", report.exit_code());

    for metric in ["main1_gap", "ftc_error"] {
        let study = run_convergence(&ConvergenceConfig {
            metric: metric.into(),
            grids: vec![64, 128, 256, 512],
            seed: 42,
            output: None,
            params: json!({}),
        })?;
        println!("{metric}: values {:?}, fitted order {:.3}", study.values, study.fitted_order);
    }
    Ok(())
}
