//! Output files, run manifests and the exit-code contract.

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

/// Failure classes with their process exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Invalid flags or malformed input files (exit 2).
    Usage(String),
    /// Data too degenerate to analyse (exit 3).
    Degenerate(String),
    /// Optimizer or decomposition failure (exit 4).
    Numerical(String),
    /// Filesystem errors (exit 1).
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Degenerate(_) => 3,
            CliError::Numerical(_) => 4,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Degenerate(m) => write!(f, "degenerate data: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<wgsense_core::Error> for CliError {
    fn from(e: wgsense_core::Error) -> Self {
        use wgsense_core::Error as E;
        match e {
            E::InvalidParameter { .. } => CliError::Usage(e.to_string()),
            E::DegeneratePostSelection(_) | E::ZeroDerivative(_) | E::DegenerateData(_) => {
                CliError::Degenerate(e.to_string())
            }
            E::ZeroNorm
            | E::NotHermitian(_)
            | E::InvalidTrace(_)
            | E::NotPositive(_)
            | E::NoConvergence { .. } => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Usage(format!("malformed CSV: {e}"))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;

/// One file produced by a command.
pub struct Artifact {
    pub path: PathBuf,
    pub bytes: Vec<u8>,
}

impl Artifact {
    pub fn json<T: Serialize>(path: &Path, value: &T) -> CliResult<Self> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        Ok(Self {
            path: path.to_path_buf(),
            bytes,
        })
    }

    pub fn csv(path: &Path, bytes: Vec<u8>) -> Self {
        Self {
            path: path.to_path_buf(),
            bytes,
        }
    }
}

/// What a command hands back to `main`.
pub struct Outcome {
    pub artifacts: Vec<Artifact>,
    /// Printed to stdout when no file was requested.
    pub stdout: Option<Vec<u8>>,
    pub parameters: Value,
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct OutputDigest {
    path: String,
    sha256: String,
    bytes: usize,
}

#[derive(Serialize)]
struct RunManifest {
    schema_version: u32,
    command: String,
    argv: Vec<String>,
    parameters: Value,
    seed: Option<u64>,
    tool_version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    timestamp_unix: Option<u64>,
    outputs: Vec<OutputDigest>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes every artifact and, if there are any, the manifest describing them.
pub fn finish(
    command: &str,
    outcome: Outcome,
    manifest: Option<&Path>,
    timestamp: bool,
) -> CliResult<()> {
    if let Some(out) = &outcome.stdout {
        use std::io::Write;
        std::io::stdout().write_all(out)?;
    }
    if outcome.artifacts.is_empty() {
        return Ok(());
    }
    let mut outputs = Vec::new();
    for a in &outcome.artifacts {
        if let Some(dir) = a.path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(&a.path, &a.bytes)?;
        outputs.push(OutputDigest {
            path: a.path.display().to_string(),
            sha256: sha256_hex(&a.bytes),
            bytes: a.bytes.len(),
        });
    }
    let manifest_path = match manifest {
        Some(p) => p.to_path_buf(),
        None => {
            let mut p = outcome.artifacts[0].path.clone().into_os_string();
            p.push(".manifest.json");
            PathBuf::from(p)
        }
    };
    let m = RunManifest {
        schema_version: SCHEMA_VERSION,
        command: command.to_string(),
        argv: std::env::args().collect(),
        parameters: outcome.parameters,
        seed: outcome.seed,
        tool_version: env!("CARGO_PKG_VERSION"),
        timestamp_unix: timestamp.then(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0)
        }),
        outputs,
    };
    let a = Artifact::json(&manifest_path, &m)?;
    std::fs::write(&a.path, &a.bytes)?;
    Ok(())
}

/// `[re, im]` pairs for JSON.
pub fn complex_pair(z: num_complex::Complex<f64>) -> [f64; 2] {
    [z.re, z.im]
}
