use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use eit_cli::{load, run, CliError, CliResult, Scenario, Written};

/// Steady-state EIT scenarios for a Doppler-broadened vapor.
#[derive(Debug, Parser)]
#[command(name = "eit", version)]
struct Args {
    scenario: Scenario,

    /// JSON config; omitted keys take the helium defaults.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,

    /// Dotted-path override such as `rates.eta=1e-3`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn execute(args: &Args) -> CliResult<Written> {
    let text = match &args.config {
        Some(path) => std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?,
        None => String::new(),
    };
    let mut config = load(&text, &args.set)?;
    if let Some(out) = &args.out {
        config.output.dir = out.display().to_string();
    }
    let dir = PathBuf::from(&config.output.dir);
    run(args.scenario, &config, &dir)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match execute(&args) {
        Ok(written) => {
            println!("{}", written.csv.display());
            println!("{}", written.metadata.display());
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("eit {}: {err}", args.scenario.name());
            ExitCode::from(err.exit_code())
        }
    }
}
