//! Run manifest: config hash, tool version, timestamps, emitted files and
//! check outcomes. Written last by every command; later commands in the
//! same output directory merge into it.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::io::{self, IoError};

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    VerificationFailure,
    SolverFailure,
}

impl Status {
    pub fn exit_code(self) -> u8 {
        match self {
            Status::Ok => 0,
            Status::SolverFailure => 2,
            Status::VerificationFailure => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    /// Non-gating checks are reported but do not change the status.
    pub gating: bool,
    pub detail: String,
}

impl Check {
    pub fn gating(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, gating: true, detail: detail.into() }
    }

    pub fn info(name: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Self { name: name.into(), pass, gating: false, detail: detail.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandRecord {
    pub command: String,
    pub status: Status,
    pub started_at: String,
    pub finished_at: String,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub tool_version: String,
    pub seed: u64,
    pub started_at: String,
    pub finished_at: String,
    /// Paths relative to the output directory, sorted; includes the manifest.
    pub files: Vec<String>,
    pub commands: Vec<CommandRecord>,
    pub status: Status,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

fn list_files(dir: &Path) -> Vec<String> {
    let mut files: Vec<String> = walkdir::WalkDir::new(dir)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_type().is_file())
        .filter_map(|e| e.path().strip_prefix(dir).ok().map(|p| p.to_string_lossy().replace('\\', "/")))
        .collect();
    if !files.iter().any(|f| f == FILE_NAME) {
        files.push(FILE_NAME.to_string());
    }
    files.sort();
    files
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Self, IoError> {
        io::read_json(&dir.join(FILE_NAME))
    }

    /// Adds `record` to the manifest in `dir` (replacing an earlier record of
    /// the same command), refreshes the file list and writes it.
    pub fn record(dir: &Path, config_hash: &str, seed: u64, record: CommandRecord) -> Result<Self, IoError> {
        fs::create_dir_all(dir).map_err(|source| IoError::File { path: dir.to_path_buf(), source })?;
        let previous = Self::load(dir).ok().filter(|m| m.config_hash == config_hash && m.seed == seed);
        let mut m = previous.unwrap_or_else(|| Manifest {
            config_hash: config_hash.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            started_at: record.started_at.clone(),
            finished_at: String::new(),
            files: Vec::new(),
            commands: Vec::new(),
            status: Status::Ok,
        });
        m.commands.retain(|c| c.command != record.command);
        m.finished_at = record.finished_at.clone();
        m.commands.push(record);
        m.status = m.commands.iter().map(|c| c.status).max().unwrap_or(Status::Ok);
        m.files = list_files(dir);
        io::write_json(&dir.join(FILE_NAME), &m)?;
        Ok(m)
    }

    /// Listed files that are not present under `dir`.
    pub fn missing_files(&self, dir: &Path) -> Vec<String> {
        self.files.iter().filter(|f| !dir.join(f).is_file()).cloned().collect()
    }
}

/// Status implied by a list of checks (solver failures are reported
/// separately by the commands).
pub fn status_of(checks: &[Check]) -> Status {
    if checks.iter().any(|c| c.gating && !c.pass) {
        Status::VerificationFailure
    } else {
        Status::Ok
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_sha256() {
        assert_eq!(sha256_hex(b"abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }

    #[test]
    fn status_order() {
        assert!(Status::SolverFailure > Status::VerificationFailure);
        assert_eq!(status_of(&[Check::info("x", false, "")]), Status::Ok);
        assert_eq!(status_of(&[Check::gating("x", false, "")]), Status::VerificationFailure);
    }
}
