//! Errors, exit codes and run metadata shared by every output file.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fmt;
use std::path::Path;
use thinfb_core::io::Metadata;
use thinfb_core::GridSpec;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug)]
pub enum CliError {
    /// Bad scenario, flag or input file: exit 2.
    Config(String),
    /// The solver did not settle: exit 3.
    NotConverged(String),
    /// Acceptance failures: exit 1.
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::NotConverged(_) => 3,
            CliError::Failed(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: {m}"),
            CliError::NotConverged(m) => write!(f, "not converged: {m}"),
            CliError::Failed(m) => write!(f, "failed: {m}"),
        }
    }
}

impl From<thinfb_core::Error> for CliError {
    fn from(e: thinfb_core::Error) -> Self {
        match e {
            thinfb_core::Error::NotConverged { .. } => CliError::NotConverged(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

pub fn io_err(path: &Path, e: impl fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, Serialize)]
pub struct Meta {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario_hash: String,
    pub seed: Option<u64>,
    pub grid: GridSpec,
}

impl Meta {
    pub fn new(scenario_hash: String, seed: Option<u64>, grid: GridSpec) -> Self {
        Self { tool: "thinfb", version: VERSION, scenario_hash, seed, grid }
    }

    /// Metadata of an input file, falling back to a hash of its bytes.
    pub fn inherit(stored: &Metadata, bytes: &[u8], grid: GridSpec) -> Self {
        let get = |k: &str| stored.iter().find(|(key, _)| key == k).map(|(_, v)| v.clone());
        let hash = get("scenario_hash").unwrap_or_else(|| sha256_hex(bytes));
        let seed = get("seed").and_then(|s| s.parse().ok());
        Self::new(hash, seed, grid)
    }

    pub fn pairs(&self) -> Metadata {
        let g = &self.grid;
        vec![
            ("tool".into(), self.tool.into()),
            ("version".into(), self.version.into()),
            ("scenario_hash".into(), self.scenario_hash.clone()),
            ("seed".into(), self.seed.map_or("none".into(), |s| s.to_string())),
            ("grid".into(), format!("n={} alpha={} half_extent={} spacing={}", g.n, g.alpha, g.half_extent, g.spacing)),
        ]
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Serialize)]
struct Wrapped<'a, T: Serialize> {
    meta: &'a Meta,
    #[serde(flatten)]
    body: &'a T,
}

pub fn write_json<T: Serialize>(path: &Path, meta: &Meta, body: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(&Wrapped { meta, body }).map_err(|e| io_err(path, e))?;
    std::fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}

/// CSV with `# key=value` metadata lines before the header.
pub fn write_csv(path: &Path, meta: &Meta, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut buf: Vec<u8> = meta.pairs().iter().map(|(k, v)| format!("# {k}={v}\n")).collect::<String>().into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header).map_err(|e| io_err(path, e))?;
        for r in rows {
            w.write_record(r).map_err(|e| io_err(path, e))?;
        }
        w.flush().map_err(|e| io_err(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| io_err(path, e))
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or(String::new(), |x| format!("{x:.12e}"))
}
