use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fss_cli::{run, RunOptions};

/// Fixed-stress split simulator for coupled flow and poroelastoplasticity.
#[derive(Parser, Debug)]
#[command(name = "fss", version)]
struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Parse and validate the configuration, then exit.
    #[arg(long)]
    validate_only: bool,
    /// Stop the run when the contraction inequality is violated.
    #[arg(long)]
    fatal_contraction: bool,
    /// error, warn, info, debug or trace.
    #[arg(long, default_value = "warn")]
    log_level: log::LevelFilter,
}

fn main() -> ExitCode {
    let args = Args::parse();
    env_logger::Builder::new()
        .filter_level(args.log_level)
        .target(env_logger::Target::Stderr)
        .init();
    let opts = RunOptions {
        validate_only: args.validate_only,
        fatal_contraction: args.fatal_contraction,
    };
    let mut stdout = std::io::stdout().lock();
    match run(&args.config, &opts, &mut stdout) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fss: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
