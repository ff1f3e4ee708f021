//! Command-line front end of the driftplan harness.
//!
//! Exit codes: 0 success, 1 configuration or file error, 2 solver or
//! planner failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use driftplan::harness::{cmd_esm_build, cmd_esm_show, cmd_lap, cmd_plan, HarnessError, RunConfig, RunMode};

#[derive(Debug, Parser)]
#[command(name = "driftplan", version, about = "Drift-capable motion planning on low-friction tracks")]
struct Cli {
    /// Run configuration (TOML).
    #[arg(long, global = true, default_value = "configs/default.toml")]
    config: PathBuf,
    /// Output directory, overriding `run.output_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Also write SVG figures.
    #[arg(long, global = true)]
    plots: bool,
    /// Assert that the run is deterministic. No command draws random numbers,
    /// so this only documents intent.
    #[arg(long, global = true)]
    seedless: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Equilibrium manifold commands.
    Esm {
        #[command(subcommand)]
        action: EsmAction,
    },
    /// One search from the configured initial state.
    Plan,
    /// Receding-horizon simulation over the configured number of laps.
    Lap,
    /// Whatever `run.mode` in the configuration selects.
    Run,
}

#[derive(Debug, Subcommand)]
enum EsmAction {
    /// Compute the manifold and write it to `paths.manifold`.
    Build,
    /// Describe the manifold file.
    Show,
}

fn run(cli: &Cli) -> Result<(), HarnessError> {
    let mut cfg = RunConfig::load(&cli.config)?;
    if let Some(out) = &cli.out {
        cfg.run.output_dir = out.clone();
    }
    cfg.run.plots |= cli.plots;
    if cli.seedless {
        log::info!("seedless run: no command consumes random numbers");
    }
    let command = match cli.command {
        Command::Run => match cfg.run.mode {
            RunMode::Plan => &Command::Plan,
            RunMode::Lap => &Command::Lap,
        },
        ref c => c,
    };
    match command {
        Command::Esm { action: EsmAction::Build } => {
            let (_, summary) = cmd_esm_build(&cfg)?;
            println!("wrote {}", cfg.paths.manifold.display());
            print!("{summary}");
        }
        Command::Esm { action: EsmAction::Show } => print!("{}", cmd_esm_show(&cfg)?),
        Command::Plan => {
            let (_, stats) = cmd_plan(&cfg)?;
            print!("{stats}");
        }
        Command::Lap => {
            let report = cmd_lap(&cfg)?;
            print!("{}", report.metrics_text);
        }
        Command::Run => unreachable!("resolved above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
