use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use monofam::harness::io::{load_family, load_json, load_section, to_json_pretty, write_text};
use monofam::harness::{run_convergence_file, run_suite_file, seed_override, DEFAULT_SEED};
use monofam::harness::io::IsoSpec;
use monofam::isomorphism::{composition_blowup_demo, estimate_m};
use monofam::section::lp_direct_norm;
use monofam::sobolev::{minimal_gradient_oracle, minimal_upper_gradient, pair_residuals_csv, sobolev_norm, verify_upper_gradient};
use monofam::Exponent;

#[derive(Parser)]
#[command(name = "monofam", version, about = "Sections of monotone families of normed spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a verification suite; exit 0 iff every property has its expected status.
    Check {
        config: PathBuf,
        /// Report path (overrides the config).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run a convergence study and write `<prefix>.csv` and `<prefix>.json`.
    Converge {
        config: PathBuf,
        /// Output prefix (overrides the config).
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Direct L^p norm and W^{1,p} norm of a section.
    Norm {
        family: PathBuf,
        section: PathBuf,
        #[arg(long, default_value = "2")]
        p: Exponent,
        /// Write `t,norm` per node here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Minimal upper gradient of a section, checked against all node pairs.
    Gradient {
        family: PathBuf,
        section: PathBuf,
        #[arg(long, default_value = "2")]
        p: Exponent,
        /// Also solve the all-pairs program directly (at most 16 nodes).
        #[arg(long)]
        oracle: bool,
        /// Write the cell gradient here.
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Write per-pair residuals here.
        #[arg(long)]
        pairs_csv: Option<PathBuf>,
    },
    /// Compatibility constants of an isomorphism onto a fixed space.
    Iso {
        family: PathBuf,
        iso: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Write `s,t,forward,inverse` per sampled pair here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Composition ratios for the cusp functions `f_n`.
    Blowup {
        #[arg(long, value_delimiter = ',', default_value = "16,32,64,128")]
        n: Vec<usize>,
        #[arg(long, default_value_t = 0.2)]
        s: f64,
        #[arg(long, default_value_t = 0.4)]
        t: f64,
        #[arg(long, default_value_t = 0.3)]
        a: f64,
        #[arg(long, default_value_t = 8192)]
        mesh: usize,
        #[arg(long, default_value_t = 2.0 / 3.0)]
        exponent: f64,
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

fn write_optional(path: &Option<PathBuf>, text: &str) -> monofam::Result<()> {
    match path {
        Some(p) => write_text(p, text),
        None => Ok(()),
    }
}

fn load(family: &Path, section: &Path) -> monofam::Result<monofam::section::Section> {
    load_section(section, load_family(family)?)
}

fn run(cli: Cli) -> monofam::Result<u8> {
    match cli.command {
        Command::Check { config, output } => {
            let (report, written) = run_suite_file(&config, output.as_deref())?;
            eprint!("{}", report.summary());
            match written {
                Some(p) => eprintln!("report written to {}", p.display()),
                None => print!("{}", report.to_json()),
            }
            Ok(report.exit_code() as u8)
        }
        Command::Converge { config, output } => {
            let (study, written) = run_convergence_file(&config, output.as_deref())?;
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            print!("{}", to_json_pretty(&study));
            Ok(0)
        }
        Command::Norm { family, section, p, csv } => {
            let u = load(&family, &section)?;
            write_optional(&csv, &u.norms_csv())?;
            let direct = lp_direct_norm(&u, p);
            let sob = sobolev_norm(&u, p)?;
            print!("{}", to_json_pretty(&json!({"lp_direct_norm": direct, "sobolev_norm": sob})));
            Ok(0)
        }
        Command::Gradient { family, section, p, oracle, csv, pairs_csv } => {
            let u = load(&family, &section)?;
            let g = minimal_upper_gradient(&u, p);
            let check = verify_upper_gradient(&u, &g, 1e-12)?;
            write_optional(&csv, &g.to_csv(u.grid()))?;
            write_optional(&pairs_csv, &pair_residuals_csv(&u, &g))?;
            let mut out = json!({"gradient": g, "verification": check});
            if oracle {
                out["oracle"] = serde_json::to_value(minimal_gradient_oracle(&u, p)?).expect("serialisable");
            }
            print!("{}", to_json_pretty(&out));
            Ok(0)
        }
        Command::Iso { family, iso, seed, csv } => {
            let fam = load_family(&family)?;
            let spec: IsoSpec = load_json(&iso)?;
            let seed = seed_override()?.or(seed).unwrap_or(DEFAULT_SEED);
            let map = spec.build(&fam, seed)?;
            let report = estimate_m(&fam, &map, seed)?;
            write_optional(&csv, &report.to_csv(fam.grid()))?;
            print!("{}", to_json_pretty(&report));
            Ok(0)
        }
        Command::Blowup { n, s, t, a, mesh, exponent, csv } => {
            let table = composition_blowup_demo(&n, s, t, a, mesh, exponent)?;
            write_optional(&csv, &table.to_csv())?;
            print!("{}", to_json_pretty(&table));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("monofam: {e}");
            ExitCode::from(2)
        }
    }
}
