//! CSV and JSON files read and written by the commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use invariant_forge::{NoisyDataset, Trajectory};
use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{CmdResult, Failure};

/// 17 significant digits: round-trips every `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn emit(args: std::fmt::Arguments<'_>) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    if let Err(e) = out.write_fmt(args).and_then(|_| out.write_all(b"\n")) {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            std::process::exit(0);
        }
        panic!("writing to stdout: {e}");
    }
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CmdResult<T> {
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(|e| Failure::new(crate::error::exit::VALIDATION, e))?;
    serde_json::from_str(&text).map_err(|e| Failure::validation(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CmdResult {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> CmdResult {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating {}", dir.display()))
        .map_err(|e| Failure::new(crate::error::exit::VALIDATION, e))
}

pub fn write_trajectory(path: &Path, traj: &Trajectory) -> CmdResult {
    let n = traj.states.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["t".to_string()];
    header.extend((1..=n).map(|i| format!("x{i}")));
    w.write_record(&header)?;
    for (t, x) in traj.times().zip(&traj.states) {
        let mut row = vec![fmt_f64(t)];
        row.extend(x.iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dataset(path: &Path, data: &NoisyDataset) -> CmdResult {
    let n = data.samples.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["k".to_string()];
    header.extend((1..=n).map(|i| format!("z{i}")));
    w.write_record(&header)?;
    for (k, z) in data.samples.iter().enumerate() {
        let mut row = vec![(k + 1).to_string()];
        row.extend(z.iter().map(|&v| fmt_f64(v)));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `k,z1,...,zn`. A file whose first column is not `k` is read as
/// bare `z` columns.
pub fn read_dataset(path: &Path) -> CmdResult<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path)
        .map_err(|e| Failure::validation(format!("{}: {e}", path.display())))?;
    let skip = usize::from(r.headers()?.get(0).map(str::trim) == Some("k"));
    let mut rows = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let row = record
            .iter()
            .skip(skip)
            .map(|f| f.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| {
                Failure::validation(format!("{} row {}: {e}", path.display(), line + 1))
            })?;
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Failure::validation(format!(
                "{} row {}: non-finite value",
                path.display(),
                line + 1
            )));
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Failure::validation(format!(
            "{}: no data rows",
            path.display()
        )));
    }
    Ok(rows)
}

pub fn parse_vector(text: &str, name: &str) -> CmdResult<Vec<f64>> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::validation(format!("--{name}: {e}")))
}

/// Record of one command invocation, written as `manifest.json`.
#[derive(Debug, Serialize)]
pub struct RunManifest<P: Serialize> {
    pub command: &'static str,
    pub version: &'static str,
    /// Fully resolved parameters; a valid config file for the same command.
    pub parameters: P,
    pub seeds: Vec<u64>,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub wall_clock_seconds: f64,
}

impl<P: Serialize> RunManifest<P> {
    pub fn new(command: &'static str, parameters: P, started: Instant) -> Self {
        Self {
            command,
            version: env!("CARGO_PKG_VERSION"),
            parameters,
            seeds: Vec::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            wall_clock_seconds: started.elapsed().as_secs_f64(),
        }
    }

    pub fn write(&self, dir: &Path) -> CmdResult {
        write_json(&dir.join("manifest.json"), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for x in [0.1, 1.0 / 3.0, 3.45, -2.5e-17, f64::MAX, f64::MIN_POSITIVE] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    fn vector_parsing() {
        assert_eq!(
            parse_vector("1, -0.5,2e-3", "theta0").unwrap(),
            vec![1.0, -0.5, 2e-3]
        );
        assert!(parse_vector("1,x", "theta0").is_err());
    }
}
