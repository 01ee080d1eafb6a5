use serde::Serialize;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

/// Reads a two-column numeric CSV.
pub fn read_pairs(path: &Path, header: bool) -> CliResult<Vec<(f64, f64)>> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    if text.trim().is_empty() {
        return Err(CliError::Usage(format!("{} is empty", path.display())));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::Data(format!("line {}: {e}", i + 1)))?;
        if rec.len() != 2 {
            return Err(CliError::Data(format!(
                "record {} has {} fields, expected 2",
                i + 1,
                rec.len()
            )));
        }
        let parse = |s: &str| {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| {
                    CliError::Data(format!("record {}: {s:?} is not a finite number", i + 1))
                })
        };
        out.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    Ok(out)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
}

/// Destination of a command's main output: a file or stdout.
pub struct Sink {
    path: Option<PathBuf>,
    force: bool,
}

impl Sink {
    pub fn new(path: Option<PathBuf>, force: bool) -> Self {
        Sink { path, force }
    }

    /// Fails early when an output file exists and `--force` is absent.
    pub fn check(&self, extra: &[Option<&PathBuf>]) -> CliResult<()> {
        for p in self.path.iter().chain(extra.iter().flatten().copied()) {
            if p.exists() && !self.force {
                return Err(CliError::Usage(format!(
                    "{} exists; pass --force to overwrite",
                    p.display()
                )));
            }
        }
        Ok(())
    }

    pub fn write(&self, content: &str) -> CliResult<()> {
        match &self.path {
            Some(p) => write_file(p, content, self.force),
            None => {
                let mut out = std::io::stdout().lock();
                out.write_all(content.as_bytes())?;
                out.flush()?;
                Ok(())
            }
        }
    }

    pub fn write_json<T: Serialize>(&self, command: &str, body: &T) -> CliResult<()> {
        self.write(&json_document(command, body)?)
    }
}

pub fn write_file(path: &Path, content: &str, force: bool) -> CliResult<()> {
    if path.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} exists; pass --force to overwrite",
            path.display()
        )));
    }
    fs::write(path, content)?;
    log::info!("wrote {}", path.display());
    Ok(())
}

/// Pretty JSON object with `schema_version` and `command` leading the fields
/// of `body`.
pub fn json_document<T: Serialize>(command: &str, body: &T) -> CliResult<String> {
    let mut doc = serde_json::Map::new();
    doc.insert("schema_version".into(), SCHEMA_VERSION.into());
    doc.insert("command".into(), command.into());
    match serde_json::to_value(body)? {
        serde_json::Value::Object(fields) => doc.extend(fields),
        other => {
            doc.insert("result".into(), other);
        }
    }
    let mut s = serde_json::to_string_pretty(&serde_json::Value::Object(doc))?;
    s.push('\n');
    Ok(s)
}

pub fn pairs_csv(header: [&str; 2], rows: &[(f64, f64)]) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)
        .map_err(|e| CliError::Data(e.to_string()))?;
    for (a, b) in rows {
        w.write_record([a.to_string(), b.to_string()])
            .map_err(|e| CliError::Data(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Data(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn matrix_csv(entries: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in entries {
        let cells: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
