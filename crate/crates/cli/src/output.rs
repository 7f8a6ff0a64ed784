//! Atomic file output and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const TOOL: &str = "infotape";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileChecksum {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    /// Everything needed to rerun: resolved parameters and sweep settings.
    pub params: serde_json::Value,
    pub timestamp: String,
    pub outputs: Vec<FileChecksum>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_owned(),
        source,
    }
}

/// Write through a temporary file in the same directory, then rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.as_file().sync_all().map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| CliError::Io {
        path: path.to_owned(),
        source: e.error,
    })?;
    Ok(())
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

pub fn plot_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".plot.py");
    out.with_file_name(name)
}

impl RunManifest {
    pub fn new(command: &str, params: serde_json::Value, files: &[(&Path, &[u8])]) -> RunManifest {
        RunManifest {
            tool: TOOL.into(),
            version: VERSION.into(),
            command: command.into(),
            params,
            timestamp: chrono::Utc::now().to_rfc3339(),
            outputs: files
                .iter()
                .map(|(p, b)| FileChecksum {
                    file: p.file_name().unwrap_or_default().to_string_lossy().into_owned(),
                    bytes: b.len() as u64,
                    sha256: sha256_hex(b),
                })
                .collect(),
        }
    }

    /// Recompute checksums of the listed files, which sit next to `manifest`.
    pub fn verify(manifest: &Path) -> Result<bool> {
        let text = std::fs::read(manifest).map_err(io_err(manifest))?;
        let m: RunManifest = serde_json::from_slice(&text)?;
        let dir = manifest.parent().unwrap_or(Path::new("."));
        for f in &m.outputs {
            let path = dir.join(&f.file);
            let bytes = std::fs::read(&path).map_err(io_err(&path))?;
            if sha256_hex(&bytes) != f.sha256 || bytes.len() as u64 != f.bytes {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Data plus optional plot script, written to `out` with a sibling manifest,
/// or the data alone to stdout.
pub fn emit(
    out: Option<&Path>,
    command: &str,
    params: serde_json::Value,
    data: &[u8],
    plot: Option<String>,
) -> Result<()> {
    let Some(out) = out else {
        let mut stdout = std::io::stdout().lock();
        stdout.write_all(data).map_err(io_err(Path::new("<stdout>")))?;
        return Ok(());
    };
    write_atomic(out, data)?;
    let mut files: Vec<(PathBuf, Vec<u8>)> = vec![(out.to_owned(), data.to_vec())];
    if let Some(script) = plot {
        let path = plot_path(out);
        write_atomic(&path, script.as_bytes())?;
        files.push((path, script.into_bytes()));
    }
    let refs: Vec<(&Path, &[u8])> = files.iter().map(|(p, b)| (p.as_path(), b.as_slice())).collect();
    let manifest = RunManifest::new(command, params, &refs);
    let mut text = serde_json::to_vec_pretty(&manifest)?;
    text.push(b'\n');
    write_atomic(&manifest_path(out), &text)
}
