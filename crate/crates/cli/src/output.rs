use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use crate::error::CliResult;

/// A CSV table: comma separated, LF line endings, mandatory header row.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> CliResult<Vec<u8>> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?)
    }
}

/// Shortest round-trip decimal form.
pub fn num(x: f64) -> String {
    x.to_string()
}

/// Empty cell for `None`.
pub fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

/// Everything a task produces, held in memory until the run succeeds.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub tables: Vec<(String, Table)>,
    /// Truncations, refusals and warnings.
    pub notes: Vec<String>,
    pub summary: BTreeMap<String, Value>,
    /// Set when the task ran but its check failed (exit code 1).
    pub failure: Option<String>,
}

impl Artifacts {
    pub fn table(&mut self, name: &str, t: Table) {
        self.tables.push((name.to_string(), t));
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn put(&mut self, key: &str, v: impl Serialize) {
        self.summary.insert(key.to_string(), serde_json::to_value(v).unwrap_or(Value::Null));
    }
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    config: &'a C,
    versions: BTreeMap<&'static str, &'static str>,
    seed: u64,
    status: &'a str,
    files: Vec<&'a str>,
    notes: &'a [String],
    summary: &'a BTreeMap<String, Value>,
}

pub fn versions() -> BTreeMap<&'static str, &'static str> {
    BTreeMap::from([("mdlab-core", mdlab::VERSION), ("mdlab-cli", env!("CARGO_PKG_VERSION"))])
}

/// Write the tables, `manifest.json` and `timing.json` into `dir`.
pub fn write_run<C: Serialize>(
    dir: &Path,
    config: &C,
    seed: u64,
    status: &str,
    art: &Artifacts,
    wall: Duration,
) -> CliResult<()> {
    fs::create_dir_all(dir)?;
    for (name, t) in &art.tables {
        fs::write(dir.join(name), t.to_bytes()?)?;
    }
    let manifest = Manifest {
        config,
        versions: versions(),
        seed,
        status,
        files: art.tables.iter().map(|(n, _)| n.as_str()).collect(),
        notes: &art.notes,
        summary: &art.summary,
    };
    fs::write(dir.join("manifest.json"), to_json(&manifest)?)?;
    write_timing(dir, wall)
}

pub fn write_timing(dir: &Path, wall: Duration) -> CliResult<()> {
    let stamp = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    let timing = serde_json::json!({ "wall_seconds": wall.as_secs_f64(), "finished_unix": stamp });
    fs::write(dir.join("timing.json"), to_json(&timing)?)?;
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> CliResult<Vec<u8>> {
    let mut s = serde_json::to_vec_pretty(v).map_err(std::io::Error::other)?;
    s.push(b'\n');
    Ok(s)
}
