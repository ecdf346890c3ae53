use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use evtrig_cli::Options;

#[derive(Parser)]
#[command(name = "evtrig", version, about = "Event-triggered consensus experiments")]
struct Cli {
    /// Directory for trace.csv, events.csv and metrics.csv (overrides the config)
    #[arg(long, global = true)]
    output_dir: Option<PathBuf>,
    /// Suppress the summary on stdout
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation or a parameter sweep
    Run { config: PathBuf },
    /// Compare a metrics.csv against the bounds that apply to its config
    Bounds { metrics: PathBuf, config: PathBuf },
    /// Event-triggered sample-and-hold control of a single linear plant
    LinearEt { config: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let opts = Options { output_dir: cli.output_dir, quiet: cli.quiet };
    let mut stdout = std::io::stdout().lock();
    let result = match &cli.command {
        Command::Run { config } => evtrig_cli::run(config, &opts, &mut stdout),
        Command::Bounds { metrics, config } => evtrig_cli::bounds(metrics, config, &opts, &mut stdout),
        Command::LinearEt { config } => evtrig_cli::linear_et(config, &opts, &mut stdout),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
