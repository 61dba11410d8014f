//! CSV tables, config hashes and run manifests.

use std::fs::{self, OpenOptions};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;

pub const TOOL: &str = "holo-evp";
pub const MANIFEST_SUFFIX: &str = ".manifest.json";

/// SHA-256 of the canonical JSON form of `value`, hex encoded.
pub fn config_hash<T: Serialize>(value: &T) -> String {
    let bytes = serde_json::to_vec(value).expect("config serialises");
    hex::encode(Sha256::digest(&bytes))
}

/// Shortest round-trip text; exponent form outside `[1e-3, 1e6)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-3..1e6).contains(&a) || !x.is_finite() {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// Rows of strings with a trailing `config_hash` column added on write.
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

    fn records(&self, hash: &str) -> impl Iterator<Item = Vec<String>> + '_ {
        let hash = hash.to_string();
        self.rows.iter().map(move |r| r.iter().cloned().chain(std::iter::once(hash.clone())).collect())
    }

    fn full_header(&self) -> Vec<String> {
        self.header.iter().cloned().chain(std::iter::once("config_hash".to_string())).collect()
    }

    pub fn to_csv(&self, hash: &str) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.full_header()).map_err(io_err)?;
        for r in self.records(hash) {
            w.write_record(r).map_err(io_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn write(&self, path: &Path, hash: &str) -> Result<(), CliError> {
        ensure_parent(path)?;
        fs::write(path, self.to_csv(hash)?).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    /// Appends rows; writes the header only when the file is new. An existing
    /// file must carry the same header.
    pub fn append(&self, path: &Path, hash: &str) -> Result<(), CliError> {
        if !path.exists() {
            return self.write(path, hash);
        }
        let mut reader = csv::Reader::from_path(path).map_err(io_err)?;
        let existing: Vec<String> = reader.headers().map_err(io_err)?.iter().map(String::from).collect();
        if existing != self.full_header() {
            return Err(CliError::Config(format!("{} has a different header", path.display())));
        }
        let file = OpenOptions::new().append(true).open(path).map_err(|e| CliError::Io(e.to_string()))?;
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(file);
        for r in self.records(hash) {
            w.write_record(r).map_err(io_err)?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

fn io_err(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) if !dir.as_os_str().is_empty() => {
            fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
        }
        _ => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Table kind, used by `report` to group outputs.
    pub kind: String,
    pub config_hash: String,
    pub seed: u64,
    pub parallel: bool,
    /// Output file names, relative to the manifest.
    pub outputs: Vec<String>,
    pub metadata: serde_json::Value,
}

impl Manifest {
    pub fn new(command: &str, kind: &str, config_hash: &str, seed: u64) -> Self {
        Self {
            tool: TOOL.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            kind: kind.into(),
            config_hash: config_hash.into(),
            seed,
            parallel: cfg!(feature = "parallel"),
            outputs: Vec::new(),
            metadata: serde_json::Value::Null,
        }
    }

    pub fn with_metadata<T: Serialize>(mut self, meta: &T) -> Self {
        self.metadata = serde_json::to_value(meta).expect("metadata serialises");
        self
    }

    /// `<output>.manifest.json` next to the main output.
    pub fn path_for(output: &Path) -> PathBuf {
        let mut name = output.file_name().map(|n| n.to_os_string()).unwrap_or_default();
        name.push(MANIFEST_SUFFIX);
        output.with_file_name(name)
    }

    /// Records `outputs` and writes the manifest beside the first of them.
    pub fn write(mut self, outputs: &[&Path]) -> Result<PathBuf, CliError> {
        let Some(first) = outputs.first() else {
            return Err(CliError::Io("manifest without outputs".into()));
        };
        self.outputs = outputs
            .iter()
            .map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default())
            .collect();
        let path = Self::path_for(first);
        let text = serde_json::to_string_pretty(&self).expect("manifest serialises") + "\n";
        fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(path)
    }
}
