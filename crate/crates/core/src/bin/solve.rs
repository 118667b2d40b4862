use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use sdg_core::cli::{self, CheckTolerance, Mode};
use sdg_core::Error;

/// Manufactured-solution runs of the staggered DG scheme.
#[derive(Parser, Debug)]
#[command(name = "solve", version)]
struct Args {
    /// Run configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `out` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run mode, overriding `mode` in the config.
    #[arg(long, value_parser = ["single", "convergence", "sweep"])]
    mode: Option<String>,
    /// Suppress progress lines.
    #[arg(long)]
    quiet: bool,
    /// Reference CSV to compare the results against.
    #[arg(long)]
    check_tables: Option<PathBuf>,
}

fn config_error(e: Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let mut config = match cli::load_config(&args.config) {
        Ok(c) => c,
        Err(e) => return config_error(e),
    };
    if let Some(out) = args.out {
        config.out = Some(out);
    }
    if let Some(mode) = args.mode {
        config.mode = mode.parse::<Mode>().expect("validated by clap");
    }
    if args.quiet {
        config.verbosity = 0;
    }
    if let Err(e) = config.validate() {
        return config_error(e);
    }
    let reference = match &args.check_tables {
        Some(path) => match std::fs::read_to_string(path).map_err(Error::from).and_then(|t| cli::read_table(&t)) {
            Ok(rows) => Some(rows),
            Err(e) => return config_error(e),
        },
        None => None,
    };

    let mut stderr = std::io::stderr();
    let summary = match cli::run(&config, &mut stderr) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    print!("{}", cli::to_table(&summary));

    if let Some(reference) = reference {
        let computed = match cli::read_table(&cli::to_csv(&summary)) {
            Ok(rows) => rows,
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(2);
            }
        };
        let report = cli::check_tables(&computed, &reference, CheckTolerance::default());
        for f in &report.failures {
            eprintln!("check failed: {f}");
        }
        if !report.passed() {
            return ExitCode::from(3);
        }
        println!("check passed: {} rows compared", report.compared);
    }
    ExitCode::SUCCESS
}
