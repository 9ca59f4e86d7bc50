//! Result serialization: line-oriented CSV and JSON manifests.
//!
//! CSV fields are written verbatim unless they contain a comma, quote, or
//! newline, in which case they are quoted with doubled inner quotes.
//! Manifests record everything needed to reproduce an output file: tool
//! version, resolved configuration, and the master seed.

use crate::error::Result;
use serde::Serialize;
use std::fmt::Display;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub struct CsvWriter {
    out: BufWriter<File>,
    columns: usize,
}

fn escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut out = BufWriter::new(File::create(path)?);
        writeln!(out, "{}", header.iter().map(|h| escape(h)).collect::<Vec<_>>().join(","))?;
        Ok(CsvWriter { out, columns: header.len() })
    }

    pub fn row(&mut self, fields: &[&dyn Display]) -> Result<()> {
        debug_assert_eq!(fields.len(), self.columns, "row width must match header");
        let line =
            fields.iter().map(|f| escape(&f.to_string())).collect::<Vec<_>>().join(",");
        writeln!(self.out, "{line}")?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

/// Reproducibility record written next to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub seed: u64,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(tool: &str, seed: u64, config: serde_json::Value) -> Self {
        Manifest {
            tool: tool.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config,
            outputs: Vec::new(),
        }
    }
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_escapes_only_when_needed() {
        let dir = std::env::temp_dir().join(format!("kcm-report-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let mut w = CsvWriter::create(&path, &["a", "b,c", "d"]).unwrap();
        w.row(&[&1.5, &"plain", &"has,comma"]).unwrap();
        w.row(&[&2, &"quote\"inside", &"multi\nline"]).unwrap();
        w.finish().unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let mut lines = text.split('\n');
        assert_eq!(lines.next().unwrap(), "a,\"b,c\",d");
        assert_eq!(lines.next().unwrap(), "1.5,plain,\"has,comma\"");
        assert_eq!(lines.next().unwrap(), "2,\"quote\"\"inside\",\"multi");
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn manifest_round_trips() {
        let m = Manifest::new("front", 42, serde_json::json!({"p": 0.3, "horizon": 100.0}));
        let text = serde_json::to_string(&m).unwrap();
        let back: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(back["seed"], 42);
        assert_eq!(back["config"]["p"], 0.3);
        assert!(!back["version"].as_str().unwrap().is_empty());
    }
}
