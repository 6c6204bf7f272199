//! Run manifests: what was run, with which settings, producing which bytes.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes via a sibling temporary file and a rename so readers never see a
/// partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: &'static str,
    pub config: serde_json::Value,
    pub inputs: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, String>,
    /// Wall-clock milliseconds per stage; the only non-reproducible field.
    pub timings_ms: BTreeMap<String, u128>,
    #[serde(skip)]
    clock: Option<(String, Instant)>,
}

impl RunManifest {
    pub fn new(command: &str, config: serde_json::Value) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            config,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
            timings_ms: BTreeMap::new(),
            clock: None,
        }
    }

    /// Starts timing `stage`, closing the previous one.
    pub fn stage(&mut self, stage: &str) {
        self.finish_stage();
        self.clock = Some((stage.to_string(), Instant::now()));
    }

    fn finish_stage(&mut self) {
        if let Some((name, start)) = self.clock.take() {
            self.timings_ms.insert(name, start.elapsed().as_millis());
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.insert(path.display().to_string(), sha256_hex(bytes));
    }

    /// Writes an artifact atomically and records its digest.
    pub fn write(&mut self, path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
        write_atomic(path, bytes)?;
        self.artifacts.insert(path.display().to_string(), sha256_hex(bytes));
        Ok(())
    }

    /// Saves the manifest next to `primary` as `<primary>.manifest.json`.
    pub fn save(mut self, primary: &Path) -> anyhow::Result<PathBuf> {
        self.finish_stage();
        let mut name = primary.as_os_str().to_owned();
        name.push(".manifest.json");
        let path = PathBuf::from(name);
        let text = serde_json::to_string_pretty(&self)? + "\n";
        write_atomic(&path, text.as_bytes())?;
        Ok(path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(sha256_hex(b""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    }

    #[test]
    fn atomic_write_leaves_no_temporary() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/out.txt");
        write_atomic(&p, b"abc").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"abc");
        assert_eq!(std::fs::read_dir(p.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn manifest_records_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("model.bin");
        let mut m = RunManifest::new("train-abae", serde_json::json!({"seed": 1}));
        m.stage("train");
        m.write(&out, b"xyz").unwrap();
        let path = m.save(&out).unwrap();
        let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
        assert_eq!(v["artifacts"][out.display().to_string()], sha256_hex(b"xyz"));
        assert!(v["timings_ms"]["train"].is_u64());
    }
}
