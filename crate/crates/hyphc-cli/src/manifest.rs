//! Per-run manifest: which stage ran with which config against which
//! inputs, and what it produced.
//!
//! `manifest.json` in the run directory maps stage name to an entry with
//! the crate version, the SHA-256 of the resolved config and of every
//! input and output file. Nothing time-dependent goes in, so reruns with
//! the same seed are byte-identical.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct StageEntry {
    pub version: String,
    pub config_sha256: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub stages: BTreeMap<String, StageEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|e| CliError::Usage(format!("cannot hash {}: {e}", path.display())))?;
    Ok(sha256_hex(&bytes))
}

impl Manifest {
    pub fn load(run_dir: &Path) -> Result<Manifest, CliError> {
        let path = run_dir.join("manifest.json");
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::Usage(format!("malformed {}: {e}", path.display())))
    }

    /// Record one stage run and rewrite the manifest.
    pub fn record(
        &mut self,
        run_dir: &Path,
        stage: &str,
        config_sha256: &str,
        inputs: &[&Path],
        outputs: &[&Path],
    ) -> Result<(), CliError> {
        let hash_all = |paths: &[&Path]| -> Result<BTreeMap<String, String>, CliError> {
            paths
                .iter()
                .map(|p| {
                    let name = p
                        .file_name()
                        .map(|n| n.to_string_lossy().into_owned())
                        .unwrap_or_else(|| p.display().to_string());
                    Ok((name, sha256_file(p)?))
                })
                .collect()
        };
        self.stages.insert(
            stage.to_string(),
            StageEntry {
                version: env!("CARGO_PKG_VERSION").to_string(),
                config_sha256: config_sha256.to_string(),
                inputs: hash_all(inputs)?,
                outputs: hash_all(outputs)?,
            },
        );
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Usage(format!("manifest serialization: {e}")))?;
        std::fs::write(run_dir.join("manifest.json"), text + "\n")
            .map_err(|e| CliError::Usage(format!("cannot write manifest: {e}")))?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_and_reload_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let input = dir.path().join("in.txt");
        std::fs::write(&input, b"hello").unwrap();

        let mut manifest = Manifest::load(dir.path()).unwrap();
        manifest.record(dir.path(), "demo", "cfg", &[&input], &[&input]).unwrap();

        let reloaded = Manifest::load(dir.path()).unwrap();
        let entry = &reloaded.stages["demo"];
        assert_eq!(entry.inputs["in.txt"], sha256_hex(b"hello"));
        assert_eq!(entry.inputs, entry.outputs);
    }

    #[test]
    fn same_content_same_manifest_bytes() {
        let dir_a = tempfile::tempdir().unwrap();
        let dir_b = tempfile::tempdir().unwrap();
        for dir in [&dir_a, &dir_b] {
            let input = dir.path().join("x");
            std::fs::write(&input, b"data").unwrap();
            let mut m = Manifest::default();
            m.record(dir.path(), "s", "h", &[&input], &[]).unwrap();
        }
        let a = std::fs::read(dir_a.path().join("manifest.json")).unwrap();
        let b = std::fs::read(dir_b.path().join("manifest.json")).unwrap();
        assert_eq!(a, b);
    }
}
