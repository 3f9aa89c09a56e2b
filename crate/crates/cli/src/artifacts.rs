//! Atomic file output and the run manifest.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` to a temp file in the target directory, then renames it
/// over `path`, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(format!("cannot create {}: {e}", dir.display())))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| CliError::io(format!("cannot create temp file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)
        .and_then(|_| tmp.as_file().sync_all())
        .and_then(|_| relax_permissions(tmp.as_file()))
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::io(format!("cannot move into {}: {}", path.display(), e.error)))?;
    Ok(())
}

// temp files are created owner-only; artifacts get the usual 0644
#[cfg(unix)]
fn relax_permissions(f: &std::fs::File) -> std::io::Result<()> {
    use std::os::unix::fs::PermissionsExt;
    f.set_permissions(std::fs::Permissions::from_mode(0o644))
}

#[cfg(not(unix))]
fn relax_permissions(_: &std::fs::File) -> std::io::Result<()> {
    Ok(())
}

pub fn read_file(path: &Path) -> Result<Vec<u8>, CliError> {
    std::fs::read(path).map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub file: String,
    pub stage: String,
    pub sha256: String,
    pub bytes: u64,
    pub schema_version: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Versions {
    pub rotodiag_cli: String,
    pub rotodiag_core: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub versions: Versions,
    pub config: RunConfig,
    /// Keyed by file name relative to the output directory.
    pub artifacts: BTreeMap<String, ArtifactEntry>,
    /// Wall-clock seconds per stage.
    pub timings_s: BTreeMap<String, f64>,
}

impl RunManifest {
    pub fn new(config: &RunConfig) -> Self {
        RunManifest {
            schema_version: SCHEMA_VERSION,
            versions: Versions {
                rotodiag_cli: env!("CARGO_PKG_VERSION").to_string(),
                rotodiag_core: rotodiag_core::VERSION.to_string(),
            },
            config: config.clone(),
            artifacts: BTreeMap::new(),
            timings_s: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let bytes = read_file(path)?;
        serde_json::from_slice(&bytes).map_err(|e| CliError::parse(format!("{}: {e}", path.display())))
    }

    /// Digest of every artifact, by file name.
    pub fn digests(&self) -> BTreeMap<String, String> {
        self.artifacts
            .iter()
            .map(|(k, v)| (k.clone(), v.sha256.clone()))
            .collect()
    }
}

/// Collects one stage's outputs, then records them in the manifest.
pub struct StageWriter<'a> {
    out_dir: &'a Path,
    stage: &'static str,
    entries: Vec<ArtifactEntry>,
}

impl<'a> StageWriter<'a> {
    pub fn new(out_dir: &'a Path, stage: &'static str) -> Self {
        StageWriter {
            out_dir,
            stage,
            entries: Vec::new(),
        }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out_dir.join(file)
    }

    pub fn write(&mut self, file: &str, bytes: &[u8]) -> Result<(), CliError> {
        write_atomic(&self.path(file), bytes)?;
        self.entries.push(ArtifactEntry {
            file: file.to_string(),
            stage: self.stage.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
            schema_version: SCHEMA_VERSION,
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, file: &str, value: &T) -> Result<(), CliError> {
        let mut s = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::contract(format!("cannot serialise {file}: {e}")))?;
        s.push('\n');
        self.write(file, s.as_bytes())
    }

    /// Merges this stage's entries into the manifest in the output
    /// directory, starting a new one if none exists or it is unreadable.
    pub fn finish(self, config: &RunConfig, seconds: f64) -> Result<Vec<ArtifactEntry>, CliError> {
        let path = self.out_dir.join(MANIFEST_FILE);
        let mut manifest = RunManifest::load(&path).unwrap_or_else(|_| RunManifest::new(config));
        manifest.config = config.clone();
        for e in &self.entries {
            manifest.artifacts.insert(e.file.clone(), e.clone());
        }
        manifest.timings_s.insert(self.stage.to_string(), seconds);
        let mut s = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::contract(format!("cannot serialise manifest: {e}")))?;
        s.push('\n');
        write_atomic(&path, s.as_bytes())?;
        Ok(self.entries)
    }
}
