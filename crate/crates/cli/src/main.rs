mod args;
mod commands;
mod config;
mod manifest;
mod svg;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use args::{Cli, Command, GlobalArgs, RerunArgs};
use config::Config;
use manifest::{output_mismatches, write_run, Invocation, RunManifest};

/// Exit 1 for runtime and I/O failures, 2 for bad usage or configuration.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl Failure {
    fn usage(error: anyhow::Error) -> Self {
        Self { code: 2, error }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(error: anyhow::Error) -> Self {
        let usage = matches!(
            error.downcast_ref::<crowding::Error>(),
            Some(crowding::Error::InvalidParameter(_))
        );
        Self {
            code: if usage { 2 } else { 1 },
            error,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

/// Prints to stdout, tolerating a closed pipe.
fn say(text: &str) {
    let _ = writeln!(std::io::stdout(), "{text}");
}

fn timestamp() -> String {
    chrono::Utc::now().format("%Y%m%dT%H%M%SZ").to_string()
}

fn run(cli: Cli) -> Result<ExitCode, Failure> {
    let g = cli.global;
    if let Some(n) = g.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring worker threads")
            .map_err(Failure::usage)?;
    }
    match cli.command {
        Command::Rerun(r) => rerun(&r, &g),
        mut command => {
            let config = match &g.config {
                Some(p) => Config::load(p).map_err(Failure::usage)?,
                None => Config::default(),
            };
            commands::absolutize_inputs(&mut command)?;
            let inv = Invocation {
                master_seed: g.seed,
                command,
                config,
            };
            let name = g.name.clone().unwrap_or_else(timestamp);
            let dir = record(&inv, &g.out, &name)?.0;
            say(&format!("wrote {}", dir.display()));
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Executes `inv`, prints its report and writes the run directory.
fn record(inv: &Invocation, out: &Path, name: &str) -> Result<(PathBuf, RunManifest), Failure> {
    let outcome = commands::execute(inv)?;
    say(&outcome.report);
    let dir = out.join(inv.command.name()).join(name);
    let manifest = write_run(&dir, inv, &outcome.inputs, &outcome.artifacts)?;
    Ok((dir, manifest))
}

fn rerun(r: &RerunArgs, g: &GlobalArgs) -> Result<ExitCode, Failure> {
    let original = RunManifest::load(&r.manifest)?;
    let original_name = r
        .manifest
        .parent()
        .and_then(Path::file_name)
        .map_or_else(|| "run".to_string(), |n| n.to_string_lossy().into_owned());
    let name = g.name.clone().unwrap_or_else(|| format!("{original_name}-rerun"));

    let (dir, fresh) = record(&original.invocation, &g.out, &name)?;
    for (was, now) in original.inputs.iter().zip(&fresh.inputs) {
        if was.sha256 != now.sha256 {
            eprintln!("warning: input {} changed since the original run", was.path);
        }
    }
    let mismatches = output_mismatches(&original, &fresh);
    if mismatches.is_empty() {
        say(&format!(
            "reproduced {} outputs byte-for-byte in {}",
            fresh.outputs.len(),
            dir.display()
        ));
        Ok(ExitCode::SUCCESS)
    } else {
        for m in &mismatches {
            eprintln!("mismatch: {m}");
        }
        Err(Failure {
            code: 1,
            error: anyhow::anyhow!("{} of {} outputs differ", mismatches.len(), original.outputs.len()),
        })
    }
}
