use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rigidity::experiment::{run_config, ExperimentConfig, Pipeline, RunError, Task};

#[derive(Parser)]
#[command(name = "rigidity", version, about = "Periodic data and conjugacy rigidity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// All pipelines for a circle map.
    CircleReport(Common),
    /// All pipelines for a toral map.
    TorusReport(Common),
    /// Unstable volume growth, entropy identities and the convergence profile.
    Entropy(Common),
    /// Conjugacy to the linear model and its regularity.
    Conjugacy(Common),
    /// Invariant density of a circle map.
    Density(Common),
    /// Periodic orbits and the constant-data statistic.
    Periodic(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (task, args) = match cli.command {
        Command::CircleReport(a) => (Task::CircleReport, a),
        Command::TorusReport(a) => (Task::TorusReport, a),
        Command::Entropy(a) => (Task::Only(Pipeline::Entropy), a),
        Command::Conjugacy(a) => (Task::Only(Pipeline::Conjugacy), a),
        Command::Density(a) => (Task::Only(Pipeline::Density), a),
        Command::Periodic(a) => (Task::Only(Pipeline::Periodic), a),
    };
    let result = ExperimentConfig::load(&args.config)
        .and_then(|mut c| c.apply(task, args.seed, args.threads).map(|()| c))
        .map_err(RunError::from)
        .and_then(|c| run_config(&c, &args.out));
    match result {
        Ok(report) => {
            print!("{}", report.verdict.render());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
