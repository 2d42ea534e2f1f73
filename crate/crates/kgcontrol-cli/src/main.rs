use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use kgcontrol_cli::{execute, Command, ExitStatus, Overrides, Scenario};

#[derive(Parser)]
#[command(name = "kgcontrol", version, about = "Bilinear Klein-Gordon control experiments")]
struct Cli {
    #[command(subcommand)]
    command: CommandArg,
}

#[derive(Subcommand)]
enum CommandArg {
    /// Simulate, compile or plan as the scenario's planner says.
    Run(Args),
    /// Convergence table of a compiled operator over a tau ladder.
    Rates(Args),
    /// Cone leakage of a localized start under random controls.
    VerifySpeed(Args),
    /// The three-dimensional sign counterexample (scenario optional).
    Kirchhoff(Args),
    /// Cross-product of parameter values, one run per cell.
    Sweep(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Scenario file (TOML).
    #[arg(long)]
    scenario: Option<PathBuf>,
    /// Output directory; overrides the scenario's.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Requested time step of every simulation.
    #[arg(long)]
    dt: Option<f64>,
    /// Comma-separated, strictly decreasing.
    #[arg(long, value_delimiter = ',')]
    tau_ladder: Option<Vec<f64>>,
}

fn exit(status: ExitStatus) -> ExitCode {
    ExitCode::from(status.code())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { exit(ExitStatus::Usage) } else { exit(ExitStatus::Success) };
        }
    };
    let (command, args) = match cli.command {
        CommandArg::Run(a) => (Command::Run, a),
        CommandArg::Rates(a) => (Command::Rates, a),
        CommandArg::VerifySpeed(a) => (Command::VerifySpeed, a),
        CommandArg::Kirchhoff(a) => (Command::Kirchhoff, a),
        CommandArg::Sweep(a) => (Command::Sweep, a),
    };
    let loaded = match (&args.scenario, command) {
        (Some(path), _) => Scenario::load(path),
        (None, Command::Kirchhoff) => Ok(Scenario::kirchhoff_default()),
        (None, _) => {
            eprintln!("error: --scenario is required for {}", command.name());
            return exit(ExitStatus::Usage);
        }
    };
    let overrides = Overrides { seed: args.seed, dt: args.dt, tau_ladder: args.tau_ladder, out_dir: args.out_dir };
    let scenario = loaded.and_then(|mut s| s.apply(&overrides).map(|()| s));
    let scenario = match scenario {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return exit(e.status());
        }
    };
    match execute(command, &scenario) {
        Ok(run) => {
            print!("{}", run.outcome.text);
            for file in &run.files {
                println!("wrote {}", file.display());
            }
            if run.outcome.status != ExitStatus::Success {
                eprintln!("{}: {}", run.outcome.status.label(), run.outcome.message);
            }
            exit(run.outcome.status)
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit(e.status())
        }
    }
}
