//! Parameter sweeps, figure recipes, CSV/SVG output and validation presets.

mod csv;
mod recipes;
mod run;
mod spec;
mod svg;
mod validate;

use thiserror::Error;

use crate::perturbation::PerturbationError;

pub use csv::{parse_csv, spec_from_csv, write_csv, CsvTable};
pub use recipes::{recipe, RECIPES};
pub use run::{run_sweep, value_columns, Cell, SweepResult};
pub use spec::{GridScale, Observable, StateKind, SweepSpec, PARAMETERS};
pub use svg::render_svg;
pub use validate::{validate, Check, ValidationReport, PRESETS};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Compute(#[from] PerturbationError),
    #[error("grid point {index} (value {value}): {message}")]
    Point { index: usize, value: f64, message: String },
    #[error("io error: {0}")]
    Io(String),
}

impl SweepError {
    /// `2` for configuration errors, `1` otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            SweepError::Config(_) => 2,
            _ => 1,
        }
    }
}

/// Runs `spec` and writes `<stem>.csv` (and `<stem>.svg` when `svg`) under `dir`.
pub fn run_to_files(spec: &SweepSpec, dir: &std::path::Path, stem: &str, svg: bool) -> Result<SweepResult, SweepError> {
    let result = run_sweep(spec)?;
    let io = |e: std::io::Error| SweepError::Io(e.to_string());
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join(format!("{stem}.csv")), write_csv(&result, Some(timestamp()))).map_err(io)?;
    if svg {
        std::fs::write(dir.join(format!("{stem}.svg")), render_svg(&result)).map_err(io)?;
    }
    Ok(result)
}

fn timestamp() -> u64 {
    std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}
