use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use icuae_core::data::{sha256_hex, stamp_line};
use serde::Serialize;

use crate::error::CliError;

/// Pretty JSON with a trailing newline, so the hash of the file on disk is
/// the hash of this string.
pub fn manifest_json(value: &impl Serialize) -> String {
    let mut json = serde_json::to_string_pretty(value).expect("manifest serializes");
    json.push('\n');
    json
}

/// Writes a manifest and returns its hash.
pub fn write_manifest(path: &Path, value: &impl Serialize) -> Result<String, CliError> {
    let json = manifest_json(value);
    std::fs::write(path, &json).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(json.as_bytes()))
}

/// Buffered CSV writer whose first line names the producing manifest.
pub struct StampedCsv {
    path: PathBuf,
    out: BufWriter<File>,
}

impl StampedCsv {
    /// Opens `path` and writes the stamp line; the caller writes the header.
    pub fn create(path: &Path, manifest_sha256: &str) -> Result<Self, CliError> {
        let file = File::create(path).map_err(|e| CliError::io(path, e))?;
        let mut csv = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
        };
        csv.raw(&stamp_line(manifest_sha256))?;
        Ok(csv)
    }

    pub fn with_header(path: &Path, manifest_sha256: &str, header: &str) -> Result<Self, CliError> {
        let mut csv = Self::create(path, manifest_sha256)?;
        csv.line(header)?;
        Ok(csv)
    }

    pub fn line(&mut self, line: &str) -> Result<(), CliError> {
        writeln!(self.out, "{line}").map_err(|e| CliError::io(&self.path, e))
    }

    pub fn raw(&mut self, text: &str) -> Result<(), CliError> {
        self.out
            .write_all(text.as_bytes())
            .map_err(|e| CliError::io(&self.path, e))
    }

    pub fn writer(&mut self) -> &mut BufWriter<File> {
        &mut self.out
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn finish(mut self) -> Result<(), CliError> {
        self.out.flush().map_err(|e| CliError::io(&self.path, e))
    }
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

pub fn file_sha256(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// `<file>.manifest.json` next to a single-file output.
pub fn sidecar_manifest_path(out: &Path) -> PathBuf {
    let mut name = out
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Shortest representation that parses back to the same value.
pub fn num(v: f64) -> String {
    format!("{v}")
}
