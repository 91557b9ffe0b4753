use std::path::PathBuf;
use std::process::ExitCode;

use cfisac::parallel::with_threads;
use cfisac::{run_experiment, ExperimentSpec, HarnessError};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cfisac", version, about = "Cell-free ISAC case-study runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML spec file.
    Run {
        spec: PathBuf,
        /// Master seed (overrides the spec).
        #[arg(long)]
        seed: Option<u64>,
        /// Monte-Carlo trials per point.
        #[arg(long)]
        trials: Option<usize>,
        /// Topologies averaged per point.
        #[arg(long)]
        topologies: Option<usize>,
        /// Output table; `.json` selects JSON, anything else CSV.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (default: one per core).
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let Command::Run { spec, seed, trials, topologies, out, threads } = cli.command;
    let mut spec = ExperimentSpec::from_file(&spec)?;
    if let Some(s) = seed {
        spec = spec.with_seed(s);
    }
    if let Some(t) = trials {
        spec.trials = t;
    }
    if let Some(t) = topologies {
        spec.topologies = t;
    }
    if out.is_some() {
        spec.output = out;
    }
    spec.validate()?;
    let path = spec
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", spec.name)));
    let table = with_threads(threads, || run_experiment(&spec))??;
    table.emit(&path)?;
    eprintln!("{}: {} rows -> {}", spec.name, table.rows.len(), path.display());
    if table.infeasible_everywhere() {
        return Err(HarnessError::InfeasibleEverywhere(spec.name.to_string()));
    }
    Ok(())
}

fn main() -> ExitCode {
    // exit code 2 is reserved for all-infeasible runs, so usage errors map to 1
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
