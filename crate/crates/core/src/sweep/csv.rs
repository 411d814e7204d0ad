use std::fmt::Write as _;

use super::run::{Cell, SweepResult};
use super::spec::SweepSpec;
use super::SweepError;

/// Data section of a CSV file.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

fn cell(c: Cell) -> String {
    match c {
        Cell::Float(x) => format!("{x:.16e}"),
        Cell::Bool(b) => b.to_string(),
    }
}

/// CSV with `#!` tool lines, `#` spec-echo lines, a header row and data.
/// The timestamp line is omitted when `timestamp` is `None`.
pub fn write_csv(result: &SweepResult, timestamp: Option<u64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "#! tool = \"modeinv {}\"", env!("CARGO_PKG_VERSION"));
    if let Some(t) = timestamp {
        let _ = writeln!(out, "#! timestamp_unix = {t}");
    }
    for (k, v) in &result.metadata {
        let _ = writeln!(out, "#! {k} = {v}");
    }
    for line in result.spec.to_toml().lines() {
        let _ = writeln!(out, "# {line}");
    }
    let mut w = ::csv::Writer::from_writer(Vec::new());
    w.write_record(&result.columns).expect("in-memory write");
    for row in &result.rows {
        w.write_record(row.iter().map(|&c| cell(c))).expect("in-memory write");
    }
    out.push_str(&String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells"));
    out
}

/// Re-parses the spec echoed in a CSV header.
pub fn spec_from_csv(text: &str) -> Result<SweepSpec, SweepError> {
    let toml: String = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .filter_map(|l| l.strip_prefix("# "))
        .map(|l| format!("{l}\n"))
        .collect();
    SweepSpec::from_toml(&toml, &[])
}

pub fn parse_csv(text: &str) -> Result<CsvTable, SweepError> {
    let bad = |e: ::csv::Error| SweepError::Config(format!("CSV parse error: {e}"));
    let mut r = ::csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    let header = r.headers().map_err(bad)?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|rec| rec.iter().map(str::to_string).collect()))
        .collect::<Result<Vec<Vec<String>>, _>>()
        .map_err(bad)?;
    Ok(CsvTable { header, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digit_floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300] {
            assert_eq!(cell(Cell::Float(x)).parse::<f64>().unwrap(), x);
        }
        assert_eq!(cell(Cell::Bool(true)), "true");
    }
}
