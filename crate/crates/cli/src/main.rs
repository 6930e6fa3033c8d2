use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sobosvd_cli::config::ExperimentConfig;
use sobosvd_cli::runner::{run, RunError};
use sobosvd_cli::verify::{parse_sizes, verify};
use sobosvd_core::cases::{get_case, list_cases};

/// Quadrature-weighted SVD/HOSVD experiments with `H¹` error checks.
#[derive(Parser)]
#[command(name = "sobosvd", version)]
struct Cli {
    /// Worker threads (SOBOSVD_THREADS takes precedence).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment config and write report.json and sigma.csv.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Output directory, overriding the config's `output`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite for one catalog case.
    Verify {
        #[arg(long = "case")]
        case: String,
        /// Grid sizes: `129`, `129,65` or `129x65`.
        #[arg(long)]
        n: String,
        /// Case parameters, comma separated.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        params: Vec<f64>,
    },
    /// List the analytic test functions.
    ListCases,
}

fn thread_count(flag: Option<usize>) -> Result<Option<usize>, String> {
    match std::env::var("SOBOSVD_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|e| format!("SOBOSVD_THREADS=`{v}`: {e}")),
        Err(_) => Ok(flag),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match thread_count(cli.threads) {
        Ok(Some(n)) => {
            if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
                eprintln!("error: cannot configure {n} threads: {e}");
                return ExitCode::from(2);
            }
        }
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match cli.command {
        Command::Run { config, out } => run_cmd(&config, out.as_deref()),
        Command::Verify { case, n, params } => verify_cmd(&case, &params, &n),
        Command::ListCases => {
            for (name, about) in list_cases() {
                println!("{name:<10} {about}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn run_cmd(config: &std::path::Path, out: Option<&std::path::Path>) -> ExitCode {
    let result = ExperimentConfig::load(config)
        .map_err(RunError::from)
        .and_then(|cfg| run(&cfg, out));
    match result {
        Ok(summary) => {
            let checks = &summary.report.checks;
            for c in checks.iter().filter(|c| !c.passed) {
                let ranks = c.ranks.as_ref().map(|r| format!(" ranks={r:?}")).unwrap_or_default();
                let mode = c.mode.map(|m| format!(" mode={m}")).unwrap_or_default();
                let quantity = c.quantity.as_deref().unwrap_or("");
                println!(
                    "FAIL {} {quantity}{ranks}{mode} residual={:?} tolerance={:?}{}",
                    c.name,
                    c.residual,
                    c.tolerance,
                    c.message.as_ref().map(|m| format!(" ({m})")).unwrap_or_default()
                );
            }
            let passed = checks.iter().filter(|c| c.passed).count();
            println!(
                "{passed}/{} checks passed; wrote report.json and sigma.csv to {}",
                checks.len(),
                summary.output_dir.display()
            );
            ExitCode::from(summary.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn verify_cmd(name: &str, params: &[f64], sizes: &str) -> ExitCode {
    let dim = match get_case(name, params) {
        Ok(c) => c.dim(),
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let n = match parse_sizes(sizes, dim) {
        Ok(n) => n,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match verify(name, params, &n) {
        Ok(outcome) => {
            println!("case {} on {:?}", outcome.case, outcome.shape);
            for line in &outcome.lines {
                println!("{line}");
            }
            if outcome.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
