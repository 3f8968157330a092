//! Experiment runner for `gibbs-core`: JSON run configs, deterministic CSV
//! and SVG artifacts, run manifests and a cache of finished runs.

pub mod cache;
pub mod config;
pub mod experiments;
pub mod output;

use cache::Cache;
use config::RunConfig;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Cache(String),
    #[error("{0}")]
    Io(String),
}

impl HarnessError {
    pub fn validation(msg: impl Into<String>) -> Self {
        HarnessError::Validation(msg.into())
    }

    /// 2 validation, 3 numeric failure, 4 cache integrity.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Validation(_) | HarnessError::Io(_) => 2,
            HarnessError::Numeric(_) => 3,
            HarnessError::Cache(_) => 4,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            HarnessError::Validation(_) => "validation",
            HarnessError::Numeric(_) => "numeric",
            HarnessError::Cache(_) => "cache",
            HarnessError::Io(_) => "io",
        }
    }

    /// One line of JSON.
    pub fn machine_line(&self) -> String {
        serde_json::json!({ "error": self.category(), "reason": self.to_string() }).to_string()
    }
}

impl From<gibbs_core::Error> for HarnessError {
    fn from(e: gibbs_core::Error) -> Self {
        use gibbs_core::Error as E;
        match e {
            E::Precondition(_) | E::Range(_) | E::Degenerate(_) | E::Construction(_) | E::EmptyShift(_) => {
                HarnessError::Validation(e.to_string())
            }
            _ => HarnessError::Numeric(e.to_string()),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CacheStatus {
    Hit,
    Miss,
    /// A damaged entry was ignored and replaced.
    Bypassed,
    Disabled,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_hash: String,
    pub kind: String,
    pub tool_version: String,
    pub wall_time_seconds: f64,
    pub cache: CacheStatus,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
    pub summary: serde_json::Value,
}

/// Runs `cfg` (or fetches it from `cache`) and writes the artifacts,
/// `config.json` and `manifest.json` into `out`.
pub fn run(cfg: &RunConfig, out: &Path, cache: Option<&Cache>) -> Result<RunManifest, HarnessError> {
    let start = Instant::now();
    let mut status = CacheStatus::Disabled;
    let mut artifacts = None;
    if let Some(c) = cache {
        match c.load(cfg) {
            Ok(Some(a)) => {
                status = CacheStatus::Hit;
                artifacts = Some(a);
            }
            Ok(None) => status = CacheStatus::Miss,
            Err(e) => {
                log::warn!("cache bypassed: {e}");
                status = CacheStatus::Bypassed;
            }
        }
    }
    let artifacts = match artifacts {
        Some(a) => a,
        None => {
            let a = experiments::run_experiment(cfg)?;
            if let Some(c) = cache {
                if let Err(e) = c.store(cfg, &a) {
                    log::warn!("could not store cache entry: {e}");
                }
            }
            a
        }
    };
    std::fs::create_dir_all(out).map_err(|e| HarnessError::Io(format!("{}: {e}", out.display())))?;
    let write = |name: &str, bytes: &[u8]| -> Result<String, HarnessError> {
        let p = out.join(name);
        std::fs::write(&p, bytes).map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
        Ok(sha256_hex(bytes))
    };
    let mut config_text = serde_json::to_string_pretty(cfg).expect("configs serialize");
    config_text.push('\n');
    let mut inputs = BTreeMap::new();
    inputs.insert("config.json".to_string(), write("config.json", config_text.as_bytes())?);
    let mut outputs = BTreeMap::new();
    for (name, bytes) in &artifacts.files {
        outputs.insert(name.clone(), write(name, bytes)?);
    }
    let manifest = RunManifest {
        config_hash: cfg.hash(),
        kind: cfg.kind().to_string(),
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time_seconds: start.elapsed().as_secs_f64(),
        cache: status,
        inputs,
        outputs,
        summary: artifacts.summary(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifests serialize");
    text.push('\n');
    write("manifest.json", text.as_bytes())?;
    Ok(manifest)
}

/// `--out`, else the config's `output_dir`, else `results/<kind>-<hash prefix>`.
pub fn output_dir(cfg: &RunConfig, flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("results").join(format!("{}-{}", cfg.kind(), &cfg.hash()[..12])))
}
