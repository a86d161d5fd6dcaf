//! The run manifest: a JSON record of the config hash, per-stage seeds,
//! and every artifact each stage produced. Reruns compare stage keys
//! against it to skip work; the completeness rule is that every file in
//! the output directory is reachable from the manifest and every listed
//! file exists.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::pipeline::PipelineError;

type Result<T> = std::result::Result<T, PipelineError>;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const LOCK_FILE: &str = ".lock";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    /// Content hash of the stage's inputs and parameters.
    pub key: String,
    /// Output files relative to the run directory.
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub config_hash: String,
    pub seeds: BTreeMap<String, u64>,
    pub stages: BTreeMap<String, StageRecord>,
}

pub fn sha256_hex(parts: &[&[u8]]) -> String {
    let mut hasher = Sha256::new();
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part);
    }
    let digest = hasher.finalize();
    let mut out = String::with_capacity(64);
    for byte in digest {
        out.push_str(&format!("{byte:02x}"));
    }
    out
}

impl Manifest {
    pub fn load(dir: &Path) -> Result<Option<Manifest>> {
        let path = dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|e| PipelineError::stage("manifest", format!("read {}: {e}", path.display())))?;
        let manifest = serde_json::from_str(&text)
            .map_err(|e| PipelineError::stage("manifest", format!("parse {}: {e}", path.display())))?;
        Ok(Some(manifest))
    }

    pub fn save(&self, dir: &Path) -> Result<()> {
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text)
            .map_err(|e| PipelineError::stage("manifest", format!("write {}: {e}", path.display())))
    }

    /// A stage is reusable when its recorded key matches and all of its
    /// outputs still exist.
    pub fn stage_is_current(&self, dir: &Path, stage: &str, key: &str) -> bool {
        match self.stages.get(stage) {
            Some(record) => {
                record.key == key && record.outputs.iter().all(|rel| dir.join(rel).exists())
            }
            None => false,
        }
    }

    pub fn record_stage(&mut self, stage: &str, key: String, outputs: Vec<PathBuf>, dir: &Path) {
        let outputs = outputs
            .into_iter()
            .map(|p| {
                p.strip_prefix(dir)
                    .expect("stage outputs live under the run directory")
                    .to_string_lossy()
                    .into_owned()
            })
            .collect();
        self.stages
            .insert(stage.to_string(), StageRecord { key, outputs });
    }

    /// Every artifact on disk is reachable from the manifest; every
    /// manifest entry exists on disk.
    pub fn verify_completeness(&self, dir: &Path) -> Result<()> {
        let mut listed: std::collections::BTreeSet<String> = std::collections::BTreeSet::new();
        for (stage, record) in &self.stages {
            for rel in &record.outputs {
                if !dir.join(rel).exists() {
                    return Err(PipelineError::stage(
                        "manifest",
                        format!("stage '{stage}' lists missing artifact '{rel}'"),
                    ));
                }
                listed.insert(rel.clone());
            }
        }
        let mut on_disk = Vec::new();
        collect_files(dir, dir, &mut on_disk)?;
        for rel in on_disk {
            if rel == MANIFEST_FILE || rel == LOCK_FILE {
                continue;
            }
            if !listed.contains(&rel) {
                return Err(PipelineError::stage(
                    "manifest",
                    format!("artifact '{rel}' is not reachable from the manifest"),
                ));
            }
        }
        Ok(())
    }
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<String>) -> Result<()> {
    let entries = std::fs::read_dir(dir)
        .map_err(|e| PipelineError::stage("manifest", format!("read dir {}: {e}", dir.display())))?;
    for entry in entries {
        let entry = entry
            .map_err(|e| PipelineError::stage("manifest", format!("read dir entry: {e}")))?;
        let path = entry.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else {
            out.push(
                path.strip_prefix(root)
                    .expect("under root")
                    .to_string_lossy()
                    .into_owned(),
            );
        }
    }
    Ok(())
}

/// Exclusive ownership of a run directory for the duration of a process.
pub struct DirLock {
    path: PathBuf,
}

impl DirLock {
    pub fn acquire(dir: &Path) -> Result<DirLock> {
        let path = dir.join(LOCK_FILE);
        match std::fs::OpenOptions::new()
            .write(true)
            .create_new(true)
            .open(&path)
        {
            Ok(_) => Ok(DirLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(PipelineError::stage(
                "lock",
                format!(
                    "{} exists; another run owns this directory (delete the file if that run is gone)",
                    path.display()
                ),
            )),
            Err(e) => Err(PipelineError::stage(
                "lock",
                format!("cannot create {}: {e}", path.display()),
            )),
        }
    }
}

impl Drop for DirLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}
