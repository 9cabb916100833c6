//! Deterministic output writing: manifest, summaries, and CSV files.
//!
//! Everything written here is a pure function of the resolved config and
//! seeds — no timestamps, hostnames, or map-ordering nondeterminism — so
//! rerunning a command reproduces its outputs byte for byte.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::Serialize;

use hyperdiff::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

/// Written alongside every command's outputs; `command` + `config` (with any
/// seed override already applied) are sufficient to rerun the command
/// exactly.
#[derive(Serialize)]
pub struct Manifest<'a, C: Serialize> {
    pub command: &'a str,
    pub config: &'a C,
    pub outputs: Vec<String>,
    pub manifest_version: u32,
}

pub struct OutDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutDir {
    pub fn create(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| {
            Error::Config(format!("cannot create output directory {}: {e}", dir.display()))
        })?;
        Ok(OutDir { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a file and record it for the manifest.
    pub fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        std::fs::write(self.dir.join(name), contents)?;
        self.written.push(name.to_string());
        Ok(())
    }

    /// Record a file written through some other API (e.g. dataset savers).
    pub fn record(&mut self, name: &str) {
        self.written.push(name.to_string());
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// Write `manifest.json` last so it can list every other output.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C) -> Result<()> {
        let mut outputs = std::mem::take(&mut self.written);
        outputs.sort();
        let manifest =
            Manifest { command, config, outputs, manifest_version: MANIFEST_VERSION };
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        std::fs::write(self.dir.join("manifest.json"), text)?;
        Ok(())
    }
}

/// Shortest-roundtrip float formatting (what `{}` gives for `f64`); parsing
/// the text back recovers the exact value, and equal values always format
/// identically, which keeps CSVs rerun-stable.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// A CSV table with a fixed header; all floats are written shortest-roundtrip.
pub struct Csv {
    text: String,
}

impl Csv {
    pub fn new(header: &str) -> Self {
        let mut text = String::new();
        text.push_str(header);
        text.push('\n');
        Csv { text }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        for (i, f) in fields.iter().enumerate() {
            if i > 0 {
                self.text.push(',');
            }
            match f {
                CsvField::Int(v) => {
                    let _ = write!(self.text, "{v}");
                }
                CsvField::Float(v) => self.text.push_str(&fmt_f64(*v)),
                CsvField::Empty => {}
            }
        }
        self.text.push('\n');
    }

    pub fn into_string(self) -> String {
        self.text
    }
}

pub enum CsvField {
    Int(usize),
    Float(f64),
    Empty,
}
