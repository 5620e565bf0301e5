use super::{input_error, Options, EXIT_INPUT};
use crate::config::RunConfig;
use crate::manifest::Manifest;

pub fn report(opts: &Options) -> u8 {
    let dir = match (&opts.out, &opts.config) {
        (Some(out), _) => out.clone(),
        (None, Some(path)) => {
            let text = match std::fs::read_to_string(path) {
                Ok(t) => t,
                Err(e) => return input_error(format!("{}: {e}", path.display())),
            };
            match RunConfig::from_json(&text) {
                Ok(c) => c.output_dir,
                Err(e) => return input_error(format!("{}: {e}", path.display())),
            }
        }
        (None, None) => return input_error("report needs --out DIR or --config PATH"),
    };
    let manifest = match Manifest::load(&dir) {
        Ok(m) => m,
        Err(e) => return input_error(format!("cannot read manifest: {e}")),
    };
    let missing = manifest.missing_files(&dir);
    if !missing.is_empty() {
        for f in &missing {
            eprintln!("error: listed file {f} is missing from {}", dir.display());
        }
        return EXIT_INPUT;
    }
    println!("run directory  {}", dir.display());
    println!("config sha256  {}", manifest.config_hash);
    println!("tool version   {}", manifest.tool_version);
    println!("seed           {}", manifest.seed);
    println!("window         {} .. {}", manifest.started_at, manifest.finished_at);
    println!("files          {}", manifest.files.len());
    println!();
    println!("{:<14} {:<40} {:<6} detail", "command", "check", "result");
    for cmd in &manifest.commands {
        for c in &cmd.checks {
            let verdict = if c.pass { "PASS" } else if c.gating { "FAIL" } else { "NOTE" };
            println!("{:<14} {:<40} {:<6} {}", cmd.command, c.name, verdict, c.detail);
        }
        println!("{:<14} {:<40} {:?}", cmd.command, "(status)", cmd.status);
    }
    println!();
    println!("overall status: {:?}", manifest.status);
    manifest.status.exit_code()
}
