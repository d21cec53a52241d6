use std::env;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::args::Format;
use crate::commands::{csv_err, CliError};

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "DYAD_OUT_DIR";

/// Column order of every path file.
pub const PATH_COLUMNS: [&str; 11] = [
    "time", "p00", "p01", "p10", "p11", "rho01", "rho02", "rho03", "rho12", "rho13", "rho23",
];

/// One sample of a density-matrix path: populations and coherence
/// magnitudes `|ρ_ik|` in state-index order.
#[derive(Debug, Clone, Serialize)]
pub struct PathRow {
    pub time: f64,
    pub populations: [f64; 4],
    pub coherences: [f64; 6],
}

/// A finished report, ready to print or store.
pub enum Emitted {
    Text(Vec<u8>),
}

impl Emitted {
    pub fn json<T: Serialize>(value: &T) -> Result<Self, CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Io(e.to_string()))?;
        bytes.push(b'\n');
        Ok(Emitted::Text(bytes))
    }

    pub fn bytes(&self) -> &[u8] {
        match self {
            Emitted::Text(b) => b,
        }
    }

    pub fn write_to(&self, path: &Path) -> Result<(), CliError> {
        if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, self.bytes())?;
        Ok(())
    }

    /// Prints to stdout, or writes to `out` resolved against the output
    /// directory variable.
    pub fn deliver(&self, out: Option<&Path>) -> Result<(), CliError> {
        match out {
            Some(p) => self.write_to(&resolve(p)),
            None => {
                let mut stdout = std::io::stdout().lock();
                stdout.write_all(self.bytes())?;
                stdout.flush()?;
                Ok(())
            }
        }
    }
}

fn resolve(p: &Path) -> PathBuf {
    match env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => PathBuf::from(dir).join(p),
        _ => p.to_path_buf(),
    }
}

pub fn write_path(path: &Path, rows: &[PathRow], format: Format) -> Result<(), CliError> {
    match format {
        Format::Json => Emitted::json(&rows)?.write_to(path),
        Format::Csv => {
            let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
            w.write_record(PATH_COLUMNS).map_err(csv_err)?;
            for r in rows {
                let mut rec = Vec::with_capacity(11);
                rec.push(r.time);
                rec.extend(r.populations);
                rec.extend(r.coherences);
                w.serialize(rec).map_err(csv_err)?;
            }
            w.flush()?;
            Ok(())
        }
    }
}
