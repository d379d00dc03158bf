use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fairlist::config::RunConfig;
use fairlist::pipeline::{cmd_all, run_stage, Stage};

/// Fair, diverse ranking of participatory-media content lists and a
/// call-log replay simulator comparing ranking models.
#[derive(Parser)]
#[command(name = "fairlist", version)]
struct Cli {
    /// Run configuration (TOML).
    #[arg(short, long, global = true, default_value = "fairlist.toml")]
    config: PathBuf,
    /// Override one config value, e.g. `--set simulation.seed=7`. Repeatable.
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE", global = true)]
    overrides: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Parse call logs into the event store, catalogue and traffic profile.
    Ingest,
    /// Filter engaged users and cluster them.
    Cluster,
    /// Fit per-cluster like-models and build recommended pools.
    Train,
    /// Compute per-cluster traffic and exposure plans.
    Plan,
    /// Replay sessions under every configured ranking model.
    Simulate,
    /// Compute fairness, diversity and deviation metrics.
    Report,
    /// Run every stage in order.
    All,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // usage errors must not collide with the ingest exit code
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let config = match RunConfig::load(&cli.config, &cli.overrides) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(Stage::Config.exit_code() as u8);
        }
    };
    let result = match cli.command {
        Command::Ingest => run_stage(Stage::Ingest, &config),
        Command::Cluster => run_stage(Stage::Cluster, &config),
        Command::Train => run_stage(Stage::Train, &config),
        Command::Plan => run_stage(Stage::Plan, &config),
        Command::Simulate => run_stage(Stage::Simulate, &config),
        Command::Report => run_stage(Stage::Report, &config),
        Command::All => cmd_all(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.stage.exit_code() as u8)
        }
    }
}
