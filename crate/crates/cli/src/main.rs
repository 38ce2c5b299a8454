use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use dfrc::estimator::SolverChoice;
use dfrc::harness::{emit, run_ber_sweep, run_demo_virtual, run_radar, run_rates, RunReport, Scenario};

#[derive(Parser)]
#[command(name = "dfrc", version, about = "OFDM-MIMO radar and communication experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory for CSV tables and run.json.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Master seed; overrides the scenario's.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Use the full-scale system parameters.
    #[arg(long, global = true)]
    full_scale: bool,
    #[arg(long, global = true, value_enum)]
    solver: Option<Solver>,
    /// Worker threads; all cores when unset.
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate targets and estimate angle, range and velocity.
    Radar { scenario: PathBuf },
    /// Monte-Carlo bit error rates of the communication receivers.
    Ber { scenario: PathBuf },
    /// Peak bit rates with and without private subcarriers.
    Rates { scenario: PathBuf },
    /// Radar run reporting coarse and virtual-array angle spectra.
    DemoVirtual { scenario: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum Solver {
    Omp,
    Fista,
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("[cli] thread pool")?;
    }
    let path = match &cli.command {
        Command::Radar { scenario }
        | Command::Ber { scenario }
        | Command::Rates { scenario }
        | Command::DemoVirtual { scenario } => scenario,
    };
    let mut scenario = Scenario::load(path)?;
    if let Some(seed) = cli.seed {
        scenario.seed = seed;
    }
    scenario.full_scale |= cli.full_scale;
    if let Some(s) = cli.solver {
        scenario.radar.pipeline.refine.solver = match s {
            Solver::Omp => SolverChoice::Omp,
            Solver::Fista => SolverChoice::Fista,
        };
    }
    let report: RunReport = match cli.command {
        Command::Radar { .. } => run_radar(&scenario)?,
        Command::Ber { .. } => run_ber_sweep(&scenario)?,
        Command::Rates { .. } => run_rates(&scenario)?,
        Command::DemoVirtual { .. } => run_demo_virtual(&scenario)?,
    };
    emit(&report, &cli.out)?;
    for w in &report.warnings {
        eprintln!("warning: {w}");
    }
    println!("{}: wrote {}", report.command, cli.out.display());
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
