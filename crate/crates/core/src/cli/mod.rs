//! Batch front end: `sgs run`, `sgs validate`, `sgs version`.
//!
//! A run writes into a temporary directory next to the target and renames it
//! into place only after every product and the manifest are complete, so a
//! failed run leaves nothing behind.

pub mod config;
pub mod pipelines;

use std::ffi::OsString;
use std::io::Read;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

pub use config::ExperimentConfig;
use pipelines::{run_pipeline, Products};

use crate::error::{Error, ErrorClass, Result};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub fn exit_code(err: &Error) -> i32 {
    match err.class() {
        ErrorClass::Config => EXIT_CONFIG,
        ErrorClass::Numerical => EXIT_NUMERICAL,
        ErrorClass::Io => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "sgs", about = "Soliton, pilot-wave and pseudo-gravity experiments", disable_version_flag = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one experiment and write its data products.
    Run {
        config: PathBuf,
        /// Override `output_dir` from the config.
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Check a config without computing anything.
    Validate { config: PathBuf },
    /// Print the version.
    Version,
}

/// Entry point of the `sgs` binary; returns the process exit code.
pub fn main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return exit_code(&e);
    }
    let result = match cli.command {
        Command::Version => {
            println!("sgs {VERSION}");
            Ok(())
        }
        Command::Validate { config } => validate(&config).map(|resolved| {
            println!("ok");
            println!("{resolved}");
        }),
        Command::Run { config, output } => run(&config, output.as_deref()).map(|dir| {
            println!("{}", dir.display());
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Builds the global rayon pool from `SGS_THREADS` if set.
fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("SGS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Error::Config(format!("SGS_THREADS: expected a positive integer, got '{raw}'")))?;
    // a pool that already exists (e.g. a second call in one process) is kept
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parses and validates a config; returns it with defaults filled in, as JSON.
pub fn validate(config_path: &Path) -> Result<String> {
    let cfg = ExperimentConfig::load(config_path).map_err(config_io)?;
    cfg.validate()?;
    serde_json::to_string_pretty(&cfg).map_err(|e| Error::Io(e.into()))
}

fn config_io(e: Error) -> Error {
    match e {
        Error::Io(io) => Error::Config(format!("cannot read config: {io}")),
        other => other,
    }
}

/// Runs the experiment described by `config_path`; returns the output directory.
pub fn run(config_path: &Path, output_override: Option<&Path>) -> Result<PathBuf> {
    let cfg = ExperimentConfig::load(config_path).map_err(config_io)?;
    run_config(&cfg, output_override)
}

pub fn run_config(cfg: &ExperimentConfig, output_override: Option<&Path>) -> Result<PathBuf> {
    cfg.validate()?;
    let target = output_override.unwrap_or(&cfg.output_dir).to_path_buf();
    if target.exists() {
        let non_empty = !target.is_dir() || std::fs::read_dir(&target)?.next().is_some();
        if non_empty {
            return Err(Error::Config(format!(
                "output_dir: {} exists and is not an empty directory",
                target.display()
            )));
        }
    }
    let parent = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&parent)?;
    let staging = tempfile::Builder::new().prefix(".sgs-run-").tempdir_in(&parent)?;

    let start = std::time::Instant::now();
    let mut products = Products::new(staging.path());
    run_pipeline(cfg, &mut products)?;
    let total = start.elapsed().as_secs_f64();

    let mut outputs = Vec::new();
    for name in products.files() {
        outputs.push(json!({
            "file": name,
            "sha256": sha256_file(&staging.path().join(name))?,
        }));
    }
    let timings: serde_json::Map<String, serde_json::Value> = products
        .timings()
        .iter()
        .map(|(k, v)| (k.clone(), json!(v)))
        .chain(std::iter::once(("total".to_string(), json!(total))))
        .collect();
    let manifest = json!({
        "tool": "sgs",
        "version": VERSION,
        "experiment": cfg.experiment.name(),
        "config": cfg,
        "outputs": outputs,
        "timings_seconds": timings,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.into()))?;
    std::fs::write(staging.path().join("manifest.json"), text + "\n")?;

    if target.exists() {
        std::fs::remove_dir(&target)?;
    }
    let kept = staging.keep();
    std::fs::rename(&kept, &target)?;
    Ok(target)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hasher.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

/// `file -> sha256` for every output listed in a run's manifest.
pub fn output_checksums(run_dir: &Path) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(run_dir.join("manifest.json"))?;
    let manifest: serde_json::Value = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
    let outputs = manifest["outputs"]
        .as_array()
        .ok_or_else(|| Error::Format("manifest has no outputs".into()))?;
    Ok(outputs
        .iter()
        .map(|o| {
            (
                o["file"].as_str().unwrap_or_default().to_string(),
                o["sha256"].as_str().unwrap_or_default().to_string(),
            )
        })
        .collect())
}
