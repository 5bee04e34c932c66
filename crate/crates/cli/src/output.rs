//! Result envelopes, CSV/JSON encoding and atomic file output.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;

/// Bumped whenever a column is added, removed, renamed or reordered.
pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL: &str = "qfeedback";
pub const OUTPUT_DIR_ENV: &str = "QFEEDBACK_OUTPUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// What a command produced, before encoding.
pub struct Report<R> {
    pub command: &'static str,
    pub config: Value,
    pub rows: Vec<R>,
    pub summary: Value,
}

#[derive(Serialize)]
struct Envelope<'a, R> {
    schema_version: u32,
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a Value,
    timestamp: String,
    rows: &'a [R],
    summary: &'a Value,
}

pub fn encode_csv<R: Serialize>(rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Runtime(format!("csv encoding: {e}")))?;
    }
    w.into_inner()
        .map_err(|e| CliError::Runtime(format!("csv encoding: {e}")))
}

pub fn encode_json<R: Serialize>(report: &Report<R>) -> Result<Vec<u8>, CliError> {
    let env = Envelope {
        schema_version: SCHEMA_VERSION,
        tool: TOOL,
        version: env!("CARGO_PKG_VERSION"),
        command: report.command,
        config: &report.config,
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        rows: &report.rows,
        summary: &report.summary,
    };
    let mut out = serde_json::to_vec_pretty(&env)
        .map_err(|e| CliError::Runtime(format!("json encoding: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so a failed run never leaves a partial file behind.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let io = |e: std::io::Error| CliError::Runtime(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(&dir).map_err(io)?;
    tmp.write_all(bytes).map_err(io)?;
    tmp.flush().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

/// `--output` if given, else `$QFEEDBACK_OUTPUT_DIR/<command>.<ext>` if the
/// variable is set, else standard output (`None`).
pub fn resolve_output(explicit: Option<&Path>, command: &str, format: Format) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    std::env::var_os(OUTPUT_DIR_ENV)
        .filter(|d| !d.is_empty())
        .map(|d| PathBuf::from(d).join(format!("{command}.{}", format.extension())))
}

/// Sidecar path for the summary block of a CSV output.
pub fn summary_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    csv_path.with_file_name(format!("{stem}.summary.json"))
}

/// Encodes and writes a report. CSV carries the rows only; its summary goes
/// to a `.summary.json` sidecar, or to standard error when the rows go to
/// standard output.
pub fn emit<R: Serialize>(
    report: &Report<R>,
    format: Format,
    output: Option<&Path>,
) -> Result<Option<PathBuf>, CliError> {
    let target = resolve_output(output, report.command, format);
    match format {
        Format::Json => {
            let bytes = encode_json(report)?;
            write_target(target.as_deref(), &bytes)?;
        }
        Format::Csv => {
            let bytes = encode_csv(&report.rows)?;
            let mut summary = serde_json::to_vec_pretty(&serde_json::json!({
                "schema_version": SCHEMA_VERSION,
                "command": report.command,
                "config": report.config,
                "summary": report.summary,
            }))
            .map_err(|e| CliError::Runtime(format!("json encoding: {e}")))?;
            summary.push(b'\n');
            match target.as_deref() {
                Some(p) => {
                    write_atomic(p, &bytes)?;
                    write_atomic(&summary_path(p), &summary)?;
                }
                None => {
                    write_target(None, &bytes)?;
                    std::io::stderr()
                        .write_all(&summary)
                        .map_err(|e| CliError::Runtime(format!("stderr: {e}")))?;
                }
            }
        }
    }
    Ok(target)
}

fn write_target(target: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match target {
        Some(p) => write_atomic(p, bytes),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)
                .and_then(|_| out.flush())
                .map_err(|e| CliError::Runtime(format!("stdout: {e}")))
        }
    }
}
