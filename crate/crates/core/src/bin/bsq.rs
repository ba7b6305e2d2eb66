//! `bsq`: runs scenarios, convergence studies and verification suites from
//! a config file. Exit status 0 when every selected check passes, 1 when a
//! check fails, 2 on errors.

use boussinesq::bench::{
    check_checkpoint, parse_config, run_duality, run_scenario, run_semigroup, run_study,
    CheckOutcome, ScenarioConfig, SolveReport,
};
use clap::{Parser, Subcommand};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "bsq",
    version,
    about = "Boussinesq workbench scenarios and verification suites"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a scenario and write diagnostics, checkpoint and report.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output.dir`).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convergence study against a manufactured solution.
    Study {
        config: PathBuf,
        /// Comma-separated grid sizes (spatial) or step counts (temporal).
        #[arg(long, value_delimiter = ',')]
        levels: Option<Vec<usize>>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Steady and unsteady transposition duality checks.
    Duality {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Semigroup calculus, analyticity constant and Duhamel comparison.
    Semigroup {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate a trajectory checkpoint.
    Check {
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 1e-9)]
        divergence_tol: f64,
    },
}

fn load(path: &Path, out: Option<PathBuf>) -> Result<ScenarioConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = parse_config(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    if let Some(dir) = out {
        cfg.output = dir;
    }
    Ok(cfg)
}

fn print_checks(checks: &[CheckOutcome]) {
    for c in checks {
        let op = match c.relation {
            boussinesq::bench::Relation::Le => "<=",
            boussinesq::bench::Relation::Ge => ">=",
            boussinesq::bench::Relation::Gt => ">",
        };
        println!(
            "{} {:<32} {:>12.4e} {op} {:e}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.value,
            c.tolerance
        );
    }
}

fn finish(rep: SolveReport, file: &str) -> Result<bool, String> {
    rep.write(file).map_err(|e| e.to_string())?;
    print_checks(&rep.checks);
    println!("report: {}", rep.config.output.join(file).display());
    Ok(rep.passed())
}

fn run(cli: Cli) -> Result<bool, String> {
    let err = |e: boussinesq::Error| e.to_string();
    match cli.command {
        Command::Run { config, out } => {
            let rep = run_scenario(&load(&config, out)?).map_err(err)?;
            print_checks(&rep.checks);
            println!("outputs: {}", rep.config.output.display());
            Ok(rep.passed())
        }
        Command::Study {
            config,
            levels,
            out,
        } => {
            let cfg = load(&config, out)?;
            let rep = run_study(&cfg, levels.as_deref()).map_err(err)?;
            if let Some(t) = &rep.convergence {
                println!("{:>6} {:>10} {:>12} {:>8}", "n", "dt", "error", "order");
                for r in &t.rows {
                    let order = r
                        .order
                        .map(|o| format!("{o:.3}"))
                        .unwrap_or_else(|| "-".into());
                    println!(
                        "{:>6} {:>10.3e} {:>12.4e} {:>8}",
                        r.resolution, r.dt, r.error, order
                    );
                }
            }
            finish(rep, "study.json")
        }
        Command::Duality { config, out } => finish(
            run_duality(&load(&config, out)?).map_err(err)?,
            "duality.json",
        ),
        Command::Semigroup { config, out } => finish(
            run_semigroup(&load(&config, out)?).map_err(err)?,
            "semigroup.json",
        ),
        Command::Check {
            checkpoint,
            divergence_tol,
        } => {
            let checks = check_checkpoint(&checkpoint, divergence_tol).map_err(err)?;
            print_checks(&checks);
            Ok(checks.iter().all(|c| c.passed))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
