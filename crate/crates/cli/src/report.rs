use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;

use crate::config::RunConfig;
use crate::CliError;

/// Everything except `metadata` is a pure function of the config.
#[derive(Debug, Serialize)]
pub struct Report {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_hash: String,
    pub config: RunConfig,
    pub pass: bool,
    pub result: Value,
    pub metadata: Metadata,
}

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub unix_time: u64,
    pub elapsed_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timings: Option<Value>,
}

impl Report {
    pub fn new(command: &str, config: &RunConfig, pass: bool, result: Value, elapsed_seconds: f64) -> Self {
        let unix_time = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        Self {
            tool: "flipflop",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_hash: config.hash(),
            config: config.clone(),
            pass,
            result,
            metadata: Metadata {
                unix_time,
                elapsed_seconds,
                timings: None,
            },
        }
    }

    pub fn write(&self, path: Option<&Path>) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        match path {
            Some(p) => write_file(p, format!("{json}\n").as_bytes()),
            None => {
                use std::io::Write;
                match writeln!(std::io::stdout().lock(), "{json}") {
                    Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => {
                        Err(CliError::Internal(format!("cannot write report: {e}")))
                    }
                    _ => Ok(()),
                }
            }
        }
    }
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))
}
