//! Subcommands. Each returns the process exit code: 0 success, 1 input
//! error, 2 solver failure, 3 verification failure.

mod report;
mod solve;
mod sweep;
mod verify;

use std::path::{Path, PathBuf};

pub use report::report;
pub use solve::solve;
pub use sweep::penalty_sweep;
pub use verify::verify;

use crate::config::RunConfig;
use crate::manifest::{self, Check, CommandRecord, Manifest, Status};

pub const EXIT_OK: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_SOLVER: u8 = 2;
pub const EXIT_VERIFY: u8 = 3;

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub config: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub inline_solve: bool,
}

/// A loaded config plus the run-level settings derived from it.
pub(crate) struct Run {
    pub config: RunConfig,
    pub hash: String,
    pub seed: u64,
    pub out: PathBuf,
    pub started_at: String,
}

pub(crate) fn input_error(message: impl std::fmt::Display) -> u8 {
    eprintln!("error: {message}");
    EXIT_INPUT
}

pub(crate) fn load(opts: &Options) -> Result<Run, String> {
    let started_at = manifest::now();
    let path = opts.config.as_ref().ok_or("--config is required")?;
    let bytes = std::fs::read(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| format!("{}: not UTF-8", path.display()))?;
    let config = RunConfig::from_json(&text).map_err(|e| format!("{}: {e}", path.display()))?;
    let seed = opts.seed.unwrap_or(config.seed);
    let out = opts.out.clone().unwrap_or_else(|| config.output_dir.clone());
    Ok(Run { config, hash: manifest::sha256_hex(&bytes), seed, out, started_at })
}

impl Run {
    pub fn path(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    /// Writes the manifest record and maps the status to an exit code.
    pub fn finish(&self, command: &str, status: Status, checks: Vec<Check>) -> u8 {
        for c in &checks {
            let verdict = if c.pass { "PASS" } else if c.gating { "FAIL" } else { "NOTE" };
            println!("{verdict:<4}  {:<32} {}", c.name, c.detail);
        }
        let record = CommandRecord {
            command: command.to_string(),
            status,
            started_at: self.started_at.clone(),
            finished_at: manifest::now(),
            checks,
        };
        match Manifest::record(&self.out, &self.hash, self.seed, record) {
            Ok(_) => status.exit_code(),
            Err(e) => input_error(e),
        }
    }
}

/// Parallelism cap from `TOOL_THREADS` (default: available cores).
pub fn thread_budget() -> usize {
    let fallback = || std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    match std::env::var("TOOL_THREADS") {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => n,
            _ => {
                log::warn!("ignoring TOOL_THREADS={v:?}");
                fallback()
            }
        },
        Err(_) => fallback(),
    }
}

pub(crate) fn relative(out: &Path, path: &Path) -> String {
    path.strip_prefix(out).unwrap_or(path).display().to_string()
}
