//! Run manifest: resolved configuration, output inventory with digests,
//! and reproducibility metadata. Always written last.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct OutputEntry {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct ImageNormalization {
    pub path: String,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: ToolInfo,
    pub created_utc: String,
    pub command: String,
    pub seed: u64,
    pub rng: String,
    /// The fully resolved configuration; feeding it back reproduces the
    /// machine-readable outputs bit for bit.
    pub config_toml: String,
    pub status: String,
    pub blow_up: Option<BlowUpInfo>,
    pub clamp_count: u64,
    pub image_normalization: Vec<ImageNormalization>,
    pub outputs: Vec<OutputEntry>,
}

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct BlowUpInfo {
    pub time: f64,
    pub mode: usize,
}

/// Collects written files and assembles the manifest.
pub struct ManifestBuilder {
    out_dir: PathBuf,
    command: String,
    seed: u64,
    config_toml: String,
    outputs: Vec<OutputEntry>,
    image_normalization: Vec<ImageNormalization>,
    clamp_count: u64,
    status: String,
    blow_up: Option<BlowUpInfo>,
}

impl ManifestBuilder {
    pub fn new(
        out_dir: &Path,
        command: &str,
        seed: u64,
        config_toml: String,
    ) -> std::io::Result<Self> {
        fs::create_dir_all(out_dir)?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            command: command.to_string(),
            seed,
            config_toml,
            outputs: Vec::new(),
            image_normalization: Vec::new(),
            clamp_count: 0,
            status: "ok".into(),
            blow_up: None,
        })
    }

    /// Writes one output file inside the out-dir and records its digest.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> std::io::Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, bytes)?;
        self.outputs.push(OutputEntry {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(bytes)),
        });
        Ok(())
    }

    pub fn record_image(&mut self, name: &str, min: f64, max: f64) {
        self.image_normalization.push(ImageNormalization {
            path: name.to_string(),
            min,
            max,
        });
    }

    pub fn set_clamp_count(&mut self, n: u64) {
        self.clamp_count = n;
    }

    pub fn set_blow_up(&mut self, time: f64, mode: usize) {
        self.status = "blow_up".into();
        self.blow_up = Some(BlowUpInfo { time, mode });
    }

    /// Writes `manifest.json` (the last file of the run).
    pub fn finish(self) -> std::io::Result<()> {
        let manifest = Manifest {
            tool: ToolInfo {
                name: "cumulus",
                version: env!("CARGO_PKG_VERSION"),
            },
            created_utc: chrono::Utc::now().to_rfc3339(),
            command: self.command,
            seed: self.seed,
            rng: cumulus::sim::RNG_DESCRIPTION.to_string(),
            config_toml: self.config_toml,
            status: self.status,
            blow_up: self.blow_up,
            clamp_count: self.clamp_count,
            image_normalization: self.image_normalization,
            outputs: self.outputs,
        };
        let json = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
        fs::write(self.out_dir.join("manifest.json"), json)
    }
}
