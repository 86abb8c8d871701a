use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sqclock_cli::scenario::Command;
use sqclock_cli::{execute, Report, Request};

/// Simulation and analysis pipelines for spin-squeezed clock comparisons.
#[derive(Parser)]
#[command(name = "sqclock", version)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Peak and effective atom-cavity coupling of the cloud.
    CalibrateCoupling(RunArgs),
    /// Fit of the coupling to projection noise against cavity shift.
    QpnFit(RunArgs),
    /// Noise reduction and Wineland parameter against probe photons.
    SqueezeSweep(RunArgs),
    /// Noise correlation of two readings against mode separation.
    CorrelationSweep(RunArgs),
    /// CSS and SSS two-ensemble comparison with estimators and ADEV.
    CompareClocks(RunArgs),
    /// Overlapping Allan deviation of a phase series.
    Adev(RunArgs),
    /// Runs whatever command the scenario names.
    Run(RunArgs),
    /// Schema and invariant check only.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Scenario file (TOML) or a manifest.json of an earlier run.
    #[arg(long)]
    scenario: PathBuf,
    /// Output directory; defaults to the scenario's output_dir or out/<name>.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Overrides the seed in the scenario.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; results do not depend on this.
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    validate_only: bool,
}

fn request(args: RunArgs, command: Option<Command>) -> Request {
    Request {
        scenario: args.scenario,
        command,
        out: args.out,
        seed: args.seed,
        threads: args.threads,
        validate_only: args.validate_only,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let req = match cli.command {
        Sub::CalibrateCoupling(a) => request(a, Some(Command::CalibrateCoupling)),
        Sub::QpnFit(a) => request(a, Some(Command::QpnFit)),
        Sub::SqueezeSweep(a) => request(a, Some(Command::SqueezeSweep)),
        Sub::CorrelationSweep(a) => request(a, Some(Command::CorrelationSweep)),
        Sub::CompareClocks(a) => request(a, Some(Command::CompareClocks)),
        Sub::Adev(a) => request(a, Some(Command::Adev)),
        Sub::Run(a) => request(a, None),
        Sub::Validate { scenario } => Request { scenario, validate_only: true, ..Request::default() },
    };
    match execute(&req) {
        Ok(Report::Valid { scenario }) => {
            println!("{}: valid ({})", req.scenario.display(), scenario.command.name());
            ExitCode::SUCCESS
        }
        Ok(Report::Ran { out_dir, content_hash, summary }) => {
            println!("{}", serde_json::to_string_pretty(&summary).expect("summary serializes"));
            eprintln!("wrote {} (content {})", out_dir.display(), &content_hash[..16]);
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("sqclock: {f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
