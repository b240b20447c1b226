//! Output directory bookkeeping and the run manifest.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::LabError;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    d.iter().map(|b| format!("{b:02x}")).collect()
}

/// Every file an experiment writes goes through [`Outputs::file`], so the
/// manifest lists all of them.
#[derive(Debug)]
pub struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    pub fn create(dir: &Path) -> Result<Self, LabError> {
        std::fs::create_dir_all(dir).map_err(|e| {
            LabError::Config(format!(
                "output directory {} is not writable: {e}",
                dir.display()
            ))
        })?;
        let probe = dir.join(".rarelab-probe");
        std::fs::write(&probe, b"").map_err(|e| {
            LabError::Config(format!(
                "output directory {} is not writable: {e}",
                dir.display()
            ))
        })?;
        std::fs::remove_file(&probe)?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn file(&mut self, name: &str) -> PathBuf {
        if !self.files.iter().any(|f| f == name) {
            self.files.push(name.to_string());
        }
        self.dir.join(name)
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn write_json(&mut self, name: &str, v: &Value) -> Result<(), LabError> {
        let path = self.file(name);
        std::fs::write(path, serde_json::to_string_pretty(v)? + "\n")?;
        Ok(())
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), LabError> {
        std::fs::write(self.file(name), text)?;
        Ok(())
    }

    /// Writes `manifest.json` and returns the combined hash of the CSV outputs.
    pub fn finish(
        self,
        experiment: &str,
        config_text: &str,
        seed: u64,
        wall: Duration,
    ) -> Result<String, LabError> {
        let mut entries = Vec::with_capacity(self.files.len());
        let mut csv_hasher = Sha256::new();
        for name in &self.files {
            let bytes = std::fs::read(self.dir.join(name))?;
            let h = sha256_hex(&bytes);
            if name.ends_with(".csv") {
                csv_hasher.update(name.as_bytes());
                csv_hasher.update(b"\0");
                csv_hasher.update(h.as_bytes());
                csv_hasher.update(b"\n");
            }
            entries.push(json!({ "path": name, "sha256": h, "bytes": bytes.len() }));
        }
        let csv_hash: String = csv_hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect();
        let manifest = json!({
            "experiment": experiment,
            "config_sha256": sha256_hex(config_text.as_bytes()),
            "config": config_text,
            "seed": seed,
            "versions": {
                "rarefaction-lab": env!("CARGO_PKG_VERSION"),
                "rarefaction-core": rarefaction_core::VERSION,
            },
            "wall_time_s": wall.as_secs_f64(),
            "csv_sha256": csv_hash,
            "files": entries,
        });
        std::fs::write(
            self.dir.join("manifest.json"),
            serde_json::to_string_pretty(&manifest)? + "\n",
        )?;
        Ok(csv_hash)
    }
}
