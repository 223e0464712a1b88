use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use polysweep::config::RunConfig;
use polysweep::json::{self, ScenarioJson};
use polysweep::{runner, LabError, EXIT_DEGENERATE_GAIT};
use polysweep_core::scenarios;

#[derive(Parser)]
#[command(name = "polysweep", version, about = "Periodic polyhedral sweeping processes and crawler gaits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Clone)]
struct RunArgs {
    /// JSON run configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog scenario (see list-scenarios).
    #[arg(long)]
    scenario: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for random initial states.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    periods: Option<usize>,
    #[arg(long)]
    steps: Option<usize>,
    /// Number of random initial states to add.
    #[arg(long)]
    random_starts: Option<usize>,
    /// Also run the incremental-minimization solver (gaits only).
    #[arg(long)]
    compare: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write trajectory, convergence and velocity reports.
    Run(RunArgs),
    /// Report the uniqueness margin of a gait; exit 2 when degenerate.
    CheckGait(RunArgs),
    /// List catalog scenarios; with --out, export each as JSON.
    ListScenarios {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sup-distance between the reduced and incremental-minimization solvers.
    Compare(RunArgs),
}

fn config(args: &RunArgs) -> Result<RunConfig, LabError> {
    let mut cfg = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| LabError::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(s) = &args.scenario {
        cfg.scenario = Some(s.clone());
        cfg.problem = None;
        cfg.gait = None;
    }
    if let Some(out) = &args.out {
        cfg.out = out.clone();
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if args.periods.is_some() {
        cfg.periods = args.periods;
    }
    if args.steps.is_some() {
        cfg.steps = args.steps;
    }
    if let Some(n) = args.random_starts {
        cfg.random_starts = n;
    }
    cfg.compare |= args.compare;
    cfg.validate()?;
    Ok(cfg)
}

fn list(out: Option<PathBuf>) -> Result<(), LabError> {
    if let Some(dir) = &out {
        std::fs::create_dir_all(dir)?;
    }
    for name in scenarios::CATALOG {
        let s = scenarios::scenario_by_name(name)?;
        let kind = if s.gait().is_some() { "gait" } else { "sweeping" };
        println!("{name}\t{kind}\tQ={}\tM={}", s.periods, s.steps_per_period);
        if let Some(dir) = &out {
            std::fs::write(dir.join(format!("{name}.json")), json::to_pretty(&ScenarioJson::from(&s))?)?;
        }
    }
    Ok(())
}

fn execute(command: Command) -> Result<i32, LabError> {
    match command {
        Command::Run(args) => {
            let outcome = runner::run(&config(&args)?)?;
            print!("{}", outcome.summary);
            Ok(0)
        }
        Command::CheckGait(args) => {
            let report = runner::check_gait(&config(&args)?)?;
            print!("{}", json::to_pretty(&report)?);
            if report.accepted {
                Ok(0)
            } else {
                eprintln!(
                    "gait rejected: margin {} at t = {} (subset {:?}), zero on {:.3e} of the grid",
                    report.min_margin, report.worst_time, report.worst_subset, report.zero_fraction
                );
                Ok(EXIT_DEGENERATE_GAIT)
            }
        }
        Command::ListScenarios { out } => list(out).map(|()| 0),
        Command::Compare(args) => {
            let cmp = runner::compare(&config(&args)?)?;
            print!("{}", json::to_pretty(&cmp)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
