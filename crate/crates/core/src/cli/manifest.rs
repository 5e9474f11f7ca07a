use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::experiments::{run_experiment, Output};
use crate::error::{Error, Result};
use crate::io::write_file;

pub const MANIFEST_NAME: &str = "manifest.json";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub experiment: String,
    /// Resolved configuration; reading it back reproduces the run.
    pub config: ExperimentConfig,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub outputs: Vec<OutputRecord>,
    pub notes: Vec<String>,
}

fn now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn records(outputs: &[Output]) -> Vec<OutputRecord> {
    outputs
        .iter()
        .map(|o| OutputRecord {
            path: o.name.clone(),
            sha256: digest(&o.bytes),
            bytes: o.bytes.len(),
        })
        .collect()
}

fn notes(cfg: &ExperimentConfig) -> Vec<String> {
    let mut n = vec![
        "mutation enters as T_XY = (i_X/Z)[(1-mu)(i_Y/(Z-1))p(X,Y) + mu/2] unless mutation_form = \"literal\"".to_string(),
        "mean_x and sd_x are conditional on states with at least one coalition member".to_string(),
        "outsider fitness weights cooperator and defector groups by i_C/i_M and i_D/i_M".to_string(),
    ];
    if cfg.game.theta.is_none() && cfg.game.theta_prime.is_none() {
        n.insert(0, "theta = theta_prime = 1 is a default choice, not a measured value".to_string());
    }
    n
}

/// Runs an experiment, writes its files and `manifest.json` into the output directory.
pub fn run(cfg: &ExperimentConfig) -> Result<(PathBuf, RunManifest)> {
    let started = now();
    let resolved = cfg.resolved()?;
    let outputs = run_experiment(&resolved)?;
    let dir = resolved.out_dir();
    for o in &outputs {
        write_file(&dir.join(&o.name), &o.bytes)?;
    }
    let mut echo = resolved.clone();
    echo.experiment.out = None;
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: resolved.kind().name().to_string(),
        config: echo,
        started_unix: started,
        finished_unix: now(),
        outputs: records(&outputs),
        notes: notes(cfg),
    };
    let mut body = serde_json::to_string_pretty(&manifest)?;
    body.push('\n');
    let path = dir.join(MANIFEST_NAME);
    write_file(&path, body.as_bytes())?;
    Ok((path, manifest))
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct VerifyReport {
    pub matched: usize,
    /// `(path, expected, actual)`; `actual` is empty when the file is no longer produced.
    pub mismatched: Vec<(String, String, String)>,
}

impl VerifyReport {
    pub fn ok(&self) -> bool {
        self.mismatched.is_empty()
    }
}

/// Recomputes every output listed in a manifest and compares checksums.
pub fn verify(manifest_path: &Path) -> Result<VerifyReport> {
    let text = std::fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: RunManifest =
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("manifest: {e}")))?;
    let mut cfg = manifest.config.clone();
    cfg.base_dir = manifest_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let fresh = records(&run_experiment(&cfg)?);
    let mut report = VerifyReport::default();
    for rec in &manifest.outputs {
        match fresh.iter().find(|f| f.path == rec.path) {
            Some(f) if f.sha256 == rec.sha256 => report.matched += 1,
            Some(f) => report
                .mismatched
                .push((rec.path.clone(), rec.sha256.clone(), f.sha256.clone())),
            None => report
                .mismatched
                .push((rec.path.clone(), rec.sha256.clone(), String::new())),
        }
    }
    Ok(report)
}
