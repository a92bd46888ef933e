//! Report envelope, input hashing, exit codes and output sinks.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use fractal_mra::ifs::SystemSpec;
use fractal_mra::{Error, IFSystem};

pub const EXIT_OK: u8 = 0;
/// A mathematical property does not hold.
pub const EXIT_PROPERTY: u8 = 1;
/// A numeric tolerance was breached or a numeric routine failed.
pub const EXIT_NUMERIC: u8 = 2;
/// Malformed input or arguments.
pub const EXIT_INPUT: u8 = 3;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }

    pub fn property(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_PROPERTY,
            message: message.into(),
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NumericInverse(_) => EXIT_NUMERIC,
            Error::InvalidSystem(_)
            | Error::LetterOutOfRange { .. }
            | Error::Budget { .. }
            | Error::BranchCountMismatch { .. }
            | Error::InvalidArgument(_)
            | Error::Json(_) => EXIT_INPUT,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

pub type CliResult<T> = Result<T, Failure>;

/// Common wrapper of every JSON report. Contains no timestamps, so equal
/// configurations give byte-identical output.
#[derive(Debug, Serialize)]
pub struct Envelope<T: Serialize> {
    pub command: String,
    pub version: &'static str,
    /// Input label to SHA-256 of its bytes.
    pub inputs: BTreeMap<String, String>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub budget: u64,
    pub exit_code: u8,
    pub result: T,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// SHA-256 over the little-endian bit patterns of all entries, row by row.
pub fn matrix_digest(matrix: &[Vec<Complex64>]) -> String {
    let mut h = Sha256::new();
    for row in matrix {
        for z in row {
            h.update(z.re.to_bits().to_le_bytes());
            h.update(z.im.to_bits().to_le_bytes());
        }
    }
    hex::encode(h.finalize())
}

/// A system read from a JSON file, with the hash of the file contents.
pub struct LoadedSpec {
    pub spec: SystemSpec,
    pub sha256: String,
}

pub fn read_spec(path: &Path) -> CliResult<LoadedSpec> {
    let bytes = fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let text = std::str::from_utf8(&bytes)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let spec = SystemSpec::from_json(text)
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    Ok(LoadedSpec {
        spec,
        sha256: sha256_hex(&bytes),
    })
}

/// Reads, builds and validates a system; any failure is an input error.
pub fn load_system(path: &Path) -> CliResult<(IFSystem, String)> {
    let loaded = read_spec(path)?;
    let system = loaded
        .spec
        .build()
        .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    let report = system.validate();
    if !report.passed() {
        return Err(Failure::input(format!(
            "{}: {}",
            path.display(),
            report.messages().join("; ")
        )));
    }
    Ok((system, loaded.sha256))
}

pub fn write_text(out: Option<&PathBuf>, text: &str) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|e| Failure::input(format!("stdout: {e}")))
        }
    }
}

pub fn write_json<T: Serialize>(out: Option<&PathBuf>, envelope: &Envelope<T>) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(envelope)
        .map_err(|e| Failure::numeric(format!("serializing report: {e}")))?;
    text.push('\n');
    write_text(out, &text)
}

/// Two-column CSV with a header line.
pub fn write_csv(out: Option<&PathBuf>, header: &str, rows: &[(f64, f64)]) -> CliResult<()> {
    let mut text = String::with_capacity(24 * (rows.len() + 1));
    text.push_str(header);
    text.push('\n');
    for (x, y) in rows {
        text.push_str(&format!("{x},{y}\n"));
    }
    write_text(out, &text)
}
