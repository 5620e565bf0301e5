use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use obstacle::commands::{self, Options};

#[derive(Parser)]
#[command(name = "obstacle", version, about = "Double obstacle solvers and regularity checks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the elliptic (or parabolic) problem of a config.
    Solve(Flags),
    /// Penalty continuation against the complementarity solution.
    PenaltySweep(Flags),
    /// Contact sets, growth profiles, seminorms and weak L^eps checks.
    Verify(Flags),
    /// Summarize the manifest of a run directory.
    Report(Flags),
}

#[derive(Args)]
struct Flags {
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `output_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Solve before verifying instead of reading `solution.csv`.
    #[arg(long)]
    inline_solve: bool,
}

impl From<Flags> for Options {
    fn from(f: Flags) -> Self {
        Options { config: f.config, out: f.out, seed: f.seed, inline_solve: f.inline_solve }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { commands::EXIT_INPUT } else { 0 });
        }
    };
    let code = match cli.command {
        Command::Solve(f) => commands::solve(&f.into()),
        Command::PenaltySweep(f) => commands::penalty_sweep(&f.into()),
        Command::Verify(f) => commands::verify(&f.into()),
        Command::Report(f) => commands::report(&f.into()),
    };
    ExitCode::from(code)
}
