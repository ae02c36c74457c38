//! Result envelopes and writers.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use berry_core::{CMatrix, ParameterPoint};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, RunConfig};
use crate::{CliError, Command, EXIT_OK};

/// A flat table, one row per parameter point.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn point_headers() -> Vec<String> {
        ["lambda.re", "lambda.im", "mu.re", "mu.im"].map(String::from).to_vec()
    }

    pub fn matrix_headers(name: &str, m: usize) -> Vec<String> {
        let mut out = Vec::with_capacity(2 * m * m);
        for i in 0..m {
            for j in 0..m {
                out.push(format!("{name}[{i}][{j}].re"));
                out.push(format!("{name}[{i}][{j}].im"));
            }
        }
        out
    }

    pub fn point_cells(p: ParameterPoint) -> Vec<f64> {
        p.to_real().to_vec()
    }

    pub fn matrix_cells(x: &CMatrix) -> Vec<f64> {
        let mut out = Vec::with_capacity(2 * x.len());
        for i in 0..x.nrows() {
            for j in 0..x.ncols() {
                out.push(x[(i, j)].re);
                out.push(x[(i, j)].im);
            }
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), CliError> {
        let mut writer = csv::Writer::from_writer(w);
        let io = |e: csv::Error| CliError::Io(e.to_string());
        writer.write_record(&self.headers).map_err(io)?;
        for row in &self.rows {
            writer.write_record(row.iter().map(|x| x.to_string())).map_err(io)?;
        }
        writer.flush().map_err(|e| CliError::Io(e.to_string()))
    }
}

/// What a command produced: a deterministic JSON payload, an optional table
/// view of it, and the exit code.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub payload: Value,
    pub table: Option<Table>,
    pub exit_code: i32,
}

impl Outcome {
    pub fn new(payload: impl Serialize) -> Result<Self, CliError> {
        Ok(Self {
            payload: to_value(payload)?,
            table: None,
            exit_code: EXIT_OK,
        })
    }

    pub fn with_table(mut self, table: Table) -> Self {
        self.table = Some(table);
        self
    }

    /// The payload as compact JSON bytes, used for determinism comparisons.
    pub fn payload_bytes(&self) -> Vec<u8> {
        serde_json::to_vec(&self.payload).expect("JSON values always serialize")
    }
}

pub fn to_value(x: impl Serialize) -> Result<Value, CliError> {
    serde_json::to_value(x).map_err(|e| CliError::Io(format!("serialization failed: {e}")))
}

pub fn supports_csv(command: Command) -> bool {
    matches!(command, Command::Connection | Command::Curvature | Command::Chern)
}

pub fn check_format(command: Command, cfg: &RunConfig) -> Result<(), CliError> {
    if cfg.format == Format::Csv && !supports_csv(command) {
        return Err(CliError::Config(format!(
            "--format csv is not available for '{}'",
            command.name()
        )));
    }
    Ok(())
}

pub fn envelope(command: Command, payload: &Value) -> Value {
    let created = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    json!({
        "metadata": {
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command.name(),
            "created_unix": created,
        },
        "payload": payload,
    })
}

pub fn render(command: Command, cfg: &RunConfig, outcome: &Outcome) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match cfg.format {
        Format::Csv => {
            let table = outcome
                .table
                .as_ref()
                .ok_or_else(|| CliError::Config(format!("'{}' has no table output", command.name())))?;
            table.write_csv(&mut buf)?;
        }
        Format::Json => {
            let doc = if cfg.payload_only {
                outcome.payload.clone()
            } else {
                envelope(command, &outcome.payload)
            };
            serde_json::to_writer_pretty(&mut buf, &doc).map_err(|e| CliError::Io(e.to_string()))?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

pub fn emit(command: Command, cfg: &RunConfig, outcome: &Outcome) -> Result<(), CliError> {
    let bytes = render(command, cfg, outcome)?;
    match &cfg.out {
        Some(path) => {
            std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| CliError::Io(e.to_string())),
    }
}
