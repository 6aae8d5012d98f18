//! Report files and run manifests.

use crate::config::Seeds;
use crate::error::{CliError, CliResult};
use drifteval::textprep::sha256_hex;
use drifteval::time::format_timestamp;
use serde::Serialize;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

pub const MANIFEST: &str = "manifest.json";

/// Writes `bytes` to a temporary file next to `path`, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    std::fs::create_dir_all(&dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(&dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        tmp.as_file().set_permissions(std::fs::Permissions::from_mode(0o644))?;
    }
    tmp.persist(path).map_err(|e| CliError::Internal(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct InputRef {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

impl InputRef {
    pub fn new(path: &Path, bytes: &[u8]) -> Self {
        Self { path: path.display().to_string(), sha256: sha256_hex(bytes), bytes: bytes.len() }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    pub config: serde_json::Value,
    pub input: InputRef,
    pub stopwords_hash: Option<String>,
    pub seeds: BTreeMap<&'static str, u64>,
    /// Output file name -> SHA-256 of its bytes.
    pub outputs: BTreeMap<String, String>,
    pub started_at: String,
    pub finished_at: String,
}

/// Collects report files for one command, then writes them and the manifest
/// that lists their hashes.
pub struct ReportWriter {
    dir: PathBuf,
    files: Vec<(String, Vec<u8>)>,
    manifest: String,
    started: chrono::DateTime<chrono::Utc>,
}

impl ReportWriter {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new(), manifest: MANIFEST.to_owned(), started: chrono::Utc::now() }
    }

    pub fn manifest_name(mut self, name: impl Into<String>) -> Self {
        self.manifest = name.into();
        self
    }

    pub fn text(&mut self, name: &str, contents: String) {
        self.files.push((name.to_owned(), contents.into_bytes()));
    }

    /// Pretty JSON wrapped as `{"manifest": <manifest file>, "report": ...}`.
    pub fn json<T: Serialize>(&mut self, name: &str, report: &T) -> CliResult<()> {
        let wrapped = serde_json::json!({ "manifest": self.manifest, "report": report });
        let mut s = serde_json::to_string_pretty(&wrapped)?;
        s.push('\n');
        self.text(name, s);
        Ok(())
    }

    pub fn finish(
        self,
        command: &str,
        config: &impl Serialize,
        input: InputRef,
        stopwords_hash: Option<String>,
        seeds: Option<&Seeds>,
    ) -> CliResult<Vec<PathBuf>> {
        let mut written = Vec::new();
        let mut outputs = BTreeMap::new();
        for (name, bytes) in &self.files {
            let path = self.dir.join(name);
            write_atomic(&path, bytes)?;
            outputs.insert(name.clone(), sha256_hex(bytes));
            written.push(path);
        }
        let manifest = RunManifest {
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION"),
            config: serde_json::to_value(config)?,
            input,
            stopwords_hash,
            seeds: seeds.map(Seeds::as_map).unwrap_or_default(),
            outputs,
            started_at: format_timestamp(self.started),
            finished_at: format_timestamp(chrono::Utc::now()),
        };
        let path = self.dir.join(&self.manifest);
        write_atomic(&path, (serde_json::to_string_pretty(&manifest)? + "\n").as_bytes())?;
        written.push(path);
        Ok(written)
    }
}
