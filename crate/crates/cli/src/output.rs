//! Deterministic CSV / JSON / manifest writers.
//!
//! CSV cells use 17-significant-digit scientific notation so values
//! round-trip exactly; fields containing commas or quotes are quoted per
//! RFC 4180. Identical (config, seed) inputs produce byte-identical files.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Formats a float with 17 significant digits; non-finite values are a
/// numerical error, never a NaN cell.
pub fn fmt_float(x: f64) -> Result<String, CliError> {
    if !x.is_finite() {
        return Err(CliError::numerical("non-finite value in output"));
    }
    Ok(format!("{x:.16e}"))
}

fn quote_csv(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// A CSV table under construction.
pub struct CsvTable {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

/// One CSV cell.
pub enum Cell {
    Float(f64),
    Int(u64),
    SignedInt(i64),
    Text(String),
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, cells: Vec<Cell>) -> Result<(), CliError> {
        assert_eq!(cells.len(), self.header.len(), "row width mismatch");
        let mut row = Vec::with_capacity(cells.len());
        for cell in cells {
            row.push(match cell {
                Cell::Float(x) => fmt_float(x)?,
                Cell::Int(n) => n.to_string(),
                Cell::SignedInt(n) => n.to_string(),
                Cell::Text(s) => quote_csv(&s),
            });
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(
            &self
                .header
                .iter()
                .map(|h| quote_csv(h))
                .collect::<Vec<_>>()
                .join(","),
        );
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Collects the files a command writes and produces the manifest.
pub struct OutputSink {
    directory: PathBuf,
    files: Vec<String>,
}

impl OutputSink {
    pub fn new(directory: &Path) -> Result<Self, CliError> {
        fs::create_dir_all(directory)
            .map_err(|e| CliError::io(format!("cannot create {}: {e}", directory.display())))?;
        Ok(Self {
            directory: directory.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write_text(&mut self, name: &str, content: &str) -> Result<(), CliError> {
        let path = self.directory.join(name);
        fs::write(&path, content)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_csv(&mut self, name: &str, table: &CsvTable) -> Result<(), CliError> {
        self.write_text(name, &table.render())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let body = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::io(format!("cannot serialize {name}: {e}")))?;
        self.write_text(name, &(body + "\n"))
    }

    /// Writes `manifest.json` with the resolved config echo, tool version
    /// and the list of files produced (itself included).
    pub fn finish_manifest<T: Serialize>(
        mut self,
        command: &str,
        seed: u64,
        config: &T,
    ) -> Result<(), CliError> {
        #[derive(Serialize)]
        struct Manifest<'a, T> {
            command: &'a str,
            version: &'a str,
            seed: u64,
            config: &'a T,
            files: Vec<String>,
        }
        let mut files = self.files.clone();
        files.push("manifest.json".to_string());
        let manifest = Manifest {
            command,
            version: env!("CARGO_PKG_VERSION"),
            seed,
            config,
            files,
        };
        self.write_text(
            "manifest.json",
            &(serde_json::to_string_pretty(&manifest)
                .map_err(|e| CliError::io(format!("cannot serialize manifest: {e}")))?
                + "\n"),
        )
    }
}
