//! `fockfield`: batch runner for the field-theory laboratory.
//!
//! Exit codes: 0 success, 1 unexpected failure, 2 invalid configuration,
//! 3 numerical budget exceeded (partial artifacts, `complete = false`).

mod config;
mod experiments;
mod manifest;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use experiments::RunError;
use manifest::Manifest;

/// Environment variable for the size of the worker pool.
const THREADS_VAR: &str = "FOCKFIELD_THREADS";

#[derive(Parser)]
#[command(name = "fockfield", version, about = "Config-driven experiments on a truncated Fock-space field model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Output directory (overrides `output` in the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize a run from its manifest.
    Report { manifest: PathBuf },
    /// List the experiment kinds a config may name.
    ListExperiments,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = init_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match cli.command {
        Command::Run { config, out } => run(&config, out.as_deref()),
        Command::Report { manifest } => match report::render(&manifest) {
            Ok(text) => {
                print!("{text}");
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Command::ListExperiments => {
            for (kind, about) in config::KINDS {
                println!("{kind:<10} {about}");
            }
            ExitCode::SUCCESS
        }
    }
}

fn init_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("{THREADS_VAR} must be a positive integer, got {raw:?}"))?;
    if n == 0 {
        return Err(format!("{THREADS_VAR} must be a positive integer"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

fn run(config_path: &Path, out: Option<&Path>) -> ExitCode {
    let text = match std::fs::read(config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let cfg = match std::str::from_utf8(&text).map_err(|e| e.to_string()).and_then(config::parse) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("invalid config {}: {e}", config_path.display());
            return ExitCode::from(2);
        }
    };
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| cfg.output.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));
    let start = Instant::now();
    let result = experiments::run(&cfg.experiment, cfg.seed);
    let mut m = Manifest {
        name: cfg.name.clone(),
        kind: cfg.experiment.kind().into(),
        config_sha256: manifest::sha256_hex(&text),
        seed: cfg.seed,
        versions: manifest::versions(),
        wall_time_s: 0.0,
        complete: true,
        error: None,
        violations: Vec::new(),
        artifacts: Vec::new(),
    };
    let (artifacts, code) = match result {
        Ok(o) => {
            m.violations = o.violations;
            (o.artifacts, 0)
        }
        Err(RunError::Invalid(e)) => {
            eprintln!("invalid experiment: {e}");
            return ExitCode::from(2);
        }
        Err(RunError::Failed(e)) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
        Err(RunError::Budget { message, partial, violations }) => {
            eprintln!("budget exceeded: {message}");
            m.complete = false;
            m.error = Some(message);
            m.violations = violations;
            (partial, 3)
        }
    };
    m.wall_time_s = start.elapsed().as_secs_f64();
    match manifest::write(&dir, m, &artifacts) {
        Ok(m) => {
            println!("{}: wrote {} artifact(s) to {}", m.name, m.artifacts.len(), dir.display());
            for v in &m.violations {
                println!("VIOLATION {v}");
            }
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: cannot write to {}: {e}", dir.display());
            ExitCode::from(1)
        }
    }
}
