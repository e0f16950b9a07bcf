use std::fs::File;
use std::io::{BufReader, Write};
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::bandits::BanditInstance;
use crate::error::{Error, Result};
use crate::lb::LbInstance;

/// Writes `bytes` to a temporary file next to `path` and renames it into
/// place, so `path` never holds a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Pretty JSON with a trailing newline, written atomically.
pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).map_err(|e| Error::from(e).context(path.display().to_string()))?;
    Ok(BufReader::new(f))
}

pub fn read_lb_instance(path: &Path) -> Result<LbInstance> {
    LbInstance::read_jsonl(open(path)?).map_err(|e| e.context(path.display().to_string()))
}

pub fn read_bandit_instance(path: &Path) -> Result<BanditInstance> {
    BanditInstance::read_jsonl(open(path)?).map_err(|e| e.context(path.display().to_string()))
}

/// A flat CSV table; cells never contain separators.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Shortest round-trip decimal form; empty for missing values.
pub fn cell(v: Option<f64>) -> String {
    v.map(|x| format!("{x}")).unwrap_or_default()
}
