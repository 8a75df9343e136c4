//! CSV, JSON and SVG output of an aggregate record.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::config::OutputPaths;
use super::harness::AggregateRecord;
use super::svg::{render_svg, SvgOptions};
use crate::error::{Error, Result};

pub const CSV_HEADER: &str = "algorithm,t,nmse,misses,extras";

pub fn to_csv(record: &AggregateRecord) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for s in &record.series {
        for t in 0..s.nmse.len() {
            let _ = writeln!(out, "{},{},{:e},{},{}", s.algorithm, t, s.nmse[t], s.misses[t], s.extras[t]);
        }
    }
    out
}

pub fn to_json(record: &AggregateRecord) -> Result<String> {
    serde_json::to_string_pretty(record).map_err(|e| Error::Argument(e.to_string()))
}

pub fn from_json(text: &str) -> Result<AggregateRecord> {
    serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_record(path: &Path) -> Result<AggregateRecord> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })
}

/// Writes every requested output and returns the paths written.
pub fn write_outputs(record: &AggregateRecord, paths: &OutputPaths, svg: &SvgOptions) -> Result<Vec<std::path::PathBuf>> {
    let mut written = Vec::new();
    if let Some(p) = &paths.csv {
        write(p, &to_csv(record))?;
        written.push(p.clone());
    }
    if let Some(p) = &paths.json {
        write(p, &to_json(record)?)?;
        written.push(p.clone());
    }
    if let Some(p) = &paths.svg {
        write(p, &render_svg(&[record], svg))?;
        written.push(p.clone());
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::config::ExperimentConfig;
    use crate::experiment::harness::run_monte_carlo;

    fn record() -> AggregateRecord {
        let mut cfg = ExperimentConfig::from_json(r#"{"m": 30, "s0": 3, "sa": 1, "d": 2, "r": 1.0, "n": 20, "c": 0.01}"#).unwrap();
        cfg.horizon = 4;
        cfg.trials = 2;
        run_monte_carlo(&cfg).unwrap().0
    }

    #[test]
    fn csv_shape() {
        let rec = record();
        let csv = to_csv(&rec);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 4 * rec.series.len());
        assert!(lines[1].starts_with("cs,0,"));
        assert!(lines.iter().skip(1).all(|l| l.split(',').count() == 5));
    }

    #[test]
    fn json_round_trip() {
        let rec = record();
        assert_eq!(from_json(&to_json(&rec).unwrap()).unwrap(), rec);
    }

    #[test]
    fn writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let rec = record();
        let paths = OutputPaths::in_dir(&dir.path().join("out"));
        let written = write_outputs(&rec, &paths, &SvgOptions::default()).unwrap();
        assert_eq!(written.len(), 3);
        assert_eq!(read_record(paths.json.as_ref().unwrap()).unwrap(), rec);
        assert!(matches!(read_record(&dir.path().join("missing.json")), Err(Error::Io { .. })));
    }
}
