//! `modeinv` command-line front end.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use modeinv::sweep::{recipe, run_to_files, validate, SweepError, SweepSpec, RECIPES};
use modeinv::units::convert_units;

const THREADS_VAR: &str = "MODEINV_THREADS";

#[derive(Parser)]
#[command(name = "modeinv", version, about = "Mode-invisibility phase and probability sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a sweep described by a TOML spec file.
    Sweep {
        specfile: PathBuf,
        /// Override a spec key, e.g. `--set points=11`. Applied after the file.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        no_svg: bool,
    },
    /// Run a validation preset and print a JSON report.
    Validate {
        preset: String,
        /// Also write the report to this file.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Run a built-in figure recipe, or `all`.
    Recipe {
        name: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
        #[arg(long)]
        no_svg: bool,
    },
    /// Convert a speed in m/s to units of c.
    Units { v_m_per_s: f64 },
}

fn configure_threads() -> Result<(), SweepError> {
    let Ok(raw) = std::env::var(THREADS_VAR) else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| SweepError::Config(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| SweepError::Config(format!("thread pool: {e}")))
}

fn sweep_and_report(spec: &SweepSpec, out: &Path, stem: &str, svg: bool) -> Result<(), SweepError> {
    let result = run_to_files(spec, out, stem, svg)?;
    println!("{}: {} rows -> {}", stem, result.rows.len(), out.join(format!("{stem}.csv")).display());
    for (k, v) in &result.metadata {
        println!("  {k} = {v}");
    }
    Ok(())
}

fn run(cli: Cli) -> Result<bool, SweepError> {
    configure_threads()?;
    match cli.command {
        Command::Sweep { specfile, set, out, no_svg } => {
            let text = std::fs::read_to_string(&specfile)
                .map_err(|e| SweepError::Config(format!("cannot read {}: {e}", specfile.display())))?;
            let spec = SweepSpec::from_toml(&text, &set)?;
            spec.validate()?;
            let stem = specfile.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep");
            sweep_and_report(&spec, &out, stem, !no_svg)?;
            Ok(true)
        }
        Command::Validate { preset, json } => {
            let report = validate(&preset)?;
            let text = serde_json::to_string_pretty(&report).expect("report serializes");
            println!("{text}");
            if let Some(path) = json {
                std::fs::write(&path, &text).map_err(|e| SweepError::Io(format!("{}: {e}", path.display())))?;
            }
            for c in report.checks.iter().filter(|c| !c.passed) {
                log::error!("check {} failed: value {} bound {} ({})", c.name, c.value, c.bound, c.detail);
            }
            Ok(report.passed)
        }
        Command::Recipe { name, out, set, no_svg } => {
            let names: Vec<&str> = if name == "all" { RECIPES.to_vec() } else { vec![name.as_str()] };
            for n in names {
                let base = recipe(n).ok_or_else(|| {
                    SweepError::Config(format!("unknown recipe {n:?}; known: {}", RECIPES.join(", ")))
                })?;
                let spec = if set.is_empty() { base } else { SweepSpec::from_toml(&base.to_toml(), &set)? };
                spec.validate()?;
                sweep_and_report(&spec, &out, n, !no_svg)?;
            }
            Ok(true)
        }
        Command::Units { v_m_per_s } => {
            let v = convert_units(v_m_per_s).map_err(|e| SweepError::Config(e.to_string()))?;
            println!("{v:.16e}");
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
