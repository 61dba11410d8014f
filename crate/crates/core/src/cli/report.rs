//! Merges run directories into consolidated tables.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::output::{Manifest, MANIFEST_SUFFIX};
use super::CliError;

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct MergedTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
    pub sources: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Report {
    pub tables: BTreeMap<String, MergedTable>,
    pub warnings: Vec<String>,
}

fn read_csv(path: &Path) -> Result<(Vec<String>, Vec<Vec<String>>), String> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| e.to_string())?;
    let header = reader.headers().map_err(|e| e.to_string())?.iter().map(String::from).collect();
    let rows = reader
        .records()
        .map(|r| r.map(|r| r.iter().map(String::from).collect()).map_err(|e| e.to_string()))
        .collect::<Result<_, _>>()?;
    Ok((header, rows))
}

fn manifests_in(dir: &Path, warnings: &mut Vec<String>) -> Vec<PathBuf> {
    let Ok(entries) = fs::read_dir(dir) else {
        warnings.push(format!("{}: not a readable directory", dir.display()));
        return Vec::new();
    };
    let mut found: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.to_string_lossy().ends_with(MANIFEST_SUFFIX))
        .collect();
    found.sort();
    if found.is_empty() {
        warnings.push(format!("{}: no manifest, skipped", dir.display()));
    }
    found
}

fn numeric(row: &[String], col: Option<usize>) -> f64 {
    col.and_then(|c| row.get(c)).and_then(|v| v.parse().ok()).unwrap_or(f64::NAN)
}

/// Merges every CSV listed by the manifests in `dirs`, grouped by kind.
/// Identical rows collapse, so merging is idempotent. QMC tables are sorted
/// by `(s, N)`, everything else by config hash.
pub fn merge(dirs: &[PathBuf]) -> Report {
    let mut report = Report::default();
    for dir in dirs {
        for path in manifests_in(dir, &mut report.warnings) {
            let manifest: Manifest = match fs::read_to_string(&path)
                .map_err(|e| e.to_string())
                .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
            {
                Ok(m) => m,
                Err(e) => {
                    report.warnings.push(format!("{}: corrupted manifest ({e}), skipped", path.display()));
                    continue;
                }
            };
            for name in manifest.outputs.iter().filter(|n| n.ends_with(".csv")) {
                let csv_path = dir.join(name);
                let (header, rows) = match read_csv(&csv_path) {
                    Ok(t) => t,
                    Err(e) => {
                        report.warnings.push(format!("{}: {e}, skipped", csv_path.display()));
                        continue;
                    }
                };
                let table = report.tables.entry(manifest.kind.clone()).or_default();
                if table.header.is_empty() {
                    table.header = header.clone();
                }
                if table.header != header {
                    report.warnings.push(format!(
                        "{}: header differs from other {} tables",
                        csv_path.display(),
                        manifest.kind
                    ));
                    continue;
                }
                table.rows.extend(rows);
                table.sources.push(csv_path.display().to_string());
            }
        }
    }
    for table in report.tables.values_mut() {
        let col = |name: &str| table.header.iter().position(|h| h == name);
        let (s, n, hash) = (col("s"), col("N"), col("config_hash"));
        table.rows.sort_by(|a, b| {
            numeric(a, s)
                .total_cmp(&numeric(b, s))
                .then(numeric(a, n).total_cmp(&numeric(b, n)))
                .then_with(|| hash.map(|h| a[h].cmp(&b[h])).unwrap_or(std::cmp::Ordering::Equal))
                .then_with(|| a.cmp(b))
        });
        table.rows.dedup();
        table.sources.sort();
        table.sources.dedup();
    }
    report
}

/// Writes `report_<kind>.csv` per table and `report.json` into `out`.
pub fn write_report(report: &Report, out: &Path) -> Result<Vec<PathBuf>, CliError> {
    fs::create_dir_all(out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
    let mut written = Vec::new();
    for (kind, table) in &report.tables {
        let path = out.join(format!("report_{kind}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(e.to_string()))?;
        w.write_record(&table.header).map_err(|e| CliError::Io(e.to_string()))?;
        for r in &table.rows {
            w.write_record(r).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush().map_err(|e| CliError::Io(e.to_string()))?;
        written.push(path);
    }
    let summary: BTreeMap<&String, (usize, &Vec<String>)> =
        report.tables.iter().map(|(k, t)| (k, (t.rows.len(), &t.sources))).collect();
    let json = serde_json::json!({ "tables": summary, "warnings": report.warnings });
    let path = out.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&json).expect("json") + "\n")
        .map_err(|e| CliError::Io(e.to_string()))?;
    written.push(path);
    Ok(written)
}
