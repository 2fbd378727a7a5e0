//! Deterministic CSV/JSON artifacts that embed the resolved configuration and
//! a git-style content hash.

use crate::config::ExperimentConfig;
use crate::error::CliError;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

/// SHA-256 of `"blob <len>\0" + bytes`, lower-case hex.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// Formats a float with the shortest round-trip representation.
pub fn num(v: f64) -> String {
    format!("{v}")
}

/// Writes artifacts into one directory and a closing `manifest.json`.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    config: Value,
    files: Vec<(String, String)>,
}

impl ArtifactWriter {
    /// Creates `dir` if needed.
    pub fn new(dir: &Path, config: &ExperimentConfig) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            config: serde_json::to_value(config)?,
            files: Vec::new(),
        })
    }

    /// Output directory.
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// `{"content_hash", "config", "data"}`; the hash covers the compact
    /// serialization of `{"config", "data"}`.
    pub fn write_json(&mut self, name: &str, data: &impl Serialize) -> Result<String, CliError> {
        let body = json!({ "config": self.config, "data": data });
        let hash = blob_hash(serde_json::to_string(&body)?.as_bytes());
        let doc = json!({ "content_hash": hash, "config": body["config"], "data": body["data"] });
        std::fs::write(self.dir.join(name), serde_json::to_string_pretty(&doc)? + "\n")?;
        self.files.push((name.to_string(), hash.clone()));
        Ok(hash)
    }

    /// CSV preceded by `# content_hash:` and `# config:` comment lines; the
    /// hash covers everything after its own line.
    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        for r in rows {
            w.write_record(&r)?;
        }
        let table = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        let mut body = format!("# config: {}\n", serde_json::to_string(&self.config)?).into_bytes();
        body.extend_from_slice(&table);
        let hash = blob_hash(&body);
        let mut out = format!("# content_hash: {hash}\n").into_bytes();
        out.extend_from_slice(&body);
        std::fs::write(self.dir.join(name), out)?;
        self.files.push((name.to_string(), hash.clone()));
        Ok(hash)
    }

    /// Writes `manifest.json` listing every artifact and its hash.
    pub fn finish(mut self) -> Result<Vec<(String, String)>, CliError> {
        let files: Vec<Value> = self.files.iter().map(|(n, h)| json!({ "file": n, "content_hash": h })).collect();
        let files_copy = self.files.clone();
        self.write_json("manifest.json", &files)?;
        Ok(files_copy)
    }
}

/// Strips the hash line from a CSV artifact and checks it.
pub fn verify_csv(text: &str) -> bool {
    let Some((first, rest)) = text.split_once('\n') else {
        return false;
    };
    first.strip_prefix("# content_hash: ") == Some(blob_hash(rest.as_bytes()).as_str())
}
