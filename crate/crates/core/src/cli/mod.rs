//! Batch front-end: reads a run configuration, dispatches one command and
//! writes CSV/JSON artifacts.
//!
//! Exit codes: 0 success, 1 failed verification checks or unwritable
//! output, 2 invalid input, 3 numerical failure.

mod commands;
pub mod config;

use std::path::{Path, PathBuf};

use clap::Parser;
use serde_json::json;

pub use commands::Check;
pub use config::RunConfig;

use crate::error::Error;
use crate::units::UnitSystem;

pub const LOG_ENV: &str = "CAVITY_KERNELS_LOG";

#[derive(Debug, Parser)]
#[command(name = "cavity-kernels", version, about = "Cavity-induced coupling kernels from Green's tensors")]
pub struct Args {
    /// Run configuration (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `output.dir`, default `out`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Unit system for inputs and outputs; overrides `units`.
    #[arg(long)]
    pub units: Option<UnitSystem>,
    /// Seed for sampled point pairs; overrides `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn exit_code(e: &Error) -> i32 {
    if e.is_numerical() {
        3
    } else {
        2
    }
}

fn error_json(e: &Error) -> serde_json::Value {
    let field = match e {
        Error::InvalidInput { field, .. } => Some(field.clone()),
        _ => None,
    };
    json!({
        "error": e.kind(),
        "field": field,
        "message": e.to_string(),
        "exit_code": exit_code(e),
    })
}

fn report(v: serde_json::Value) {
    eprintln!("{v}");
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or(LOG_ENV, "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

fn write_artifacts(dir: &Path, files: &[(&str, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, contents) in files {
        std::fs::write(dir.join(name), contents)?;
    }
    Ok(())
}

/// Runs one configuration and returns the process exit code. Errors are
/// written to stderr as a single JSON object.
pub fn run(args: &Args) -> i32 {
    init_logging();
    let mut cfg = match RunConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            report(error_json(&e));
            return exit_code(&e);
        }
    };
    if let Some(u) = args.units {
        cfg.units = Some(u);
    }
    if let Some(s) = args.seed {
        cfg.seed = Some(s);
    }
    cfg.seed = Some(cfg.seed());
    let units = *cfg.units.get_or_insert(UnitSystem::Natural);
    let dir = args
        .out
        .clone()
        .or_else(|| cfg.output.dir.clone())
        .unwrap_or_else(|| PathBuf::from("out"));

    let pool = match rayon::ThreadPoolBuilder::new()
        .num_threads(args.threads.unwrap_or(0))
        .build()
    {
        Ok(p) => p,
        Err(e) => {
            let e = Error::invalid("threads", e.to_string());
            report(error_json(&e));
            return exit_code(&e);
        }
    };
    log::info!("running {} with {} threads", cfg.command.as_str(), pool.current_num_threads());
    let outcome = match pool.install(|| commands::dispatch(&cfg, units)) {
        Ok(o) => o,
        Err(e) => {
            report(error_json(&e));
            return exit_code(&e);
        }
    };

    let mut files: Vec<(&str, String)> = outcome.artifacts.into_iter().map(|a| (a.name, a.contents)).collect();
    let mut resolved = serde_json::to_string_pretty(&cfg).expect("serializable");
    resolved.push('\n');
    files.push(("config.json", resolved));
    if let Err(e) = write_artifacts(&dir, &files) {
        report(json!({
            "error": "Io",
            "field": "out",
            "message": format!("cannot write to {}: {e}", dir.display()),
            "exit_code": 1,
        }));
        return 1;
    }
    if !outcome.failed.is_empty() {
        report(json!({
            "error": "VerificationFailed",
            "failed": outcome.failed,
            "exit_code": 1,
        }));
        return 1;
    }
    0
}
