//! Run reports and CSV series, written atomically.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Diagnostics;
use crate::error::Result;

/// One judged number: the quantity it instantiates, the tolerance it was
/// judged against and the outcome.
#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub quantity: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, quantity: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            quantity: quantity.into(),
            value,
            tolerance,
            passed: value <= tolerance,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub experiment: String,
    pub version: &'static str,
    pub config: Diagnostics,
    pub conditions: BTreeMap<String, f64>,
    pub quantities: BTreeMap<String, serde_json::Value>,
    pub verdicts: Vec<Verdict>,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    pub wall_clock_seconds: f64,
}

impl RunReport {
    pub fn new(diag: Diagnostics) -> Self {
        Self {
            experiment: diag.config.kind.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config: diag,
            conditions: BTreeMap::new(),
            quantities: BTreeMap::new(),
            verdicts: Vec::new(),
            files: Vec::new(),
            warnings: Vec::new(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn quantity(&mut self, key: &str, value: impl Serialize) {
        self.quantities.insert(
            key.into(),
            serde_json::to_value(value).unwrap_or(serde_json::Value::Null),
        );
    }

    pub fn passed(&self) -> bool {
        self.verdicts.iter().all(|v| v.passed)
    }
}

/// CSV with a fixed header; floats at 17 significant digits.
pub struct Csv {
    text: String,
    width: usize,
}

pub enum Cell<'a> {
    F(f64),
    I(usize),
    S(&'a str),
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Self {
            text: format!("{}\n", header.join(",")),
            width: header.len(),
        }
    }

    pub fn row(&mut self, cells: &[Cell<'_>]) {
        debug_assert_eq!(cells.len(), self.width);
        for (k, c) in cells.iter().enumerate() {
            if k > 0 {
                self.text.push(',');
            }
            let _ = match c {
                Cell::F(x) => write!(self.text, "{x:.16e}"),
                Cell::I(n) => write!(self.text, "{n}"),
                Cell::S(s) => write!(self.text, "{s}"),
            };
        }
        self.text.push('\n');
    }

    pub fn floats(&mut self, xs: &[f64]) {
        let cells: Vec<Cell<'_>> = xs.iter().map(|x| Cell::F(*x)).collect();
        self.row(&cells);
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

/// Writes through a temporary file in the same directory, then renames.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp: PathBuf = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, path)?;
    Ok(())
}
