//! Run manifests: written before the first step, finalized on exit.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use g2flow::diagnostics::Event;
use g2flow::flow::InitialCondition;
use g2flow::grid::GridSpec;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManifestStatus {
    Running,
    Completed,
    SingularitySuspected,
    Failed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_sha256: String,
    pub code_version: String,
    pub grid: GridSpec,
    pub initial: InitialCondition,
    pub seed: Option<u64>,
    pub start_wall_time: f64,
    pub end_wall_time: Option<f64>,
    pub status: ManifestStatus,
    pub error: Option<String>,
    pub steps: Option<usize>,
    pub final_t: Option<f64>,
    pub events: Vec<Event>,
    #[serde(skip)]
    path: PathBuf,
}

fn wall_time() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunManifest {
    pub fn begin(dir: &Path, config_text: &str, grid: GridSpec, initial: InitialCondition) -> std::io::Result<Self> {
        let m = RunManifest {
            config_sha256: sha256_hex(config_text.as_bytes()),
            code_version: concat!("g2flow ", env!("CARGO_PKG_VERSION")).to_string(),
            grid,
            seed: initial.seed(),
            initial,
            start_wall_time: wall_time(),
            end_wall_time: None,
            status: ManifestStatus::Running,
            error: None,
            steps: None,
            final_t: None,
            events: Vec::new(),
            path: dir.join("manifest.json"),
        };
        m.write()?;
        Ok(m)
    }

    pub fn finish(&mut self, status: ManifestStatus, error: Option<String>) -> std::io::Result<()> {
        self.status = status;
        self.error = error;
        self.end_wall_time = Some(wall_time());
        self.write()
    }

    fn write(&self) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        fs::write(&self.path, text + "\n")
    }
}
