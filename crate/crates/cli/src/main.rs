use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use vibfilter_cli::{execute, Experiment};

/// Run one simulation experiment and write its CSV tables.
#[derive(Debug, Parser)]
#[command(name = "vibfilter", version)]
struct Cli {
    experiment: Experiment,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Overrides `[run] seed`.
    #[arg(long, value_parser = clap::value_parser!(u64).range(0..=i64::MAX as u64))]
    seed: Option<u64>,
    /// Output directory; falls back to `[run] out`, then `./out`.
    #[arg(long, env = "VIBFILTER_OUT")]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.experiment, &cli.config, cli.seed, cli.out) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
