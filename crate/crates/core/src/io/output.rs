use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::RunConfig;
use crate::coalescent::StageResult;
use crate::error::{Error, Result};
use crate::gmm::ModelEvidence;
use crate::smc::TraceRow;

/// SHA-256 of `bytes` framed as a git blob object (`blob <len>\0…`).
pub fn git_blob_sha256(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

/// A real with 17 significant digits; `NA` for NaN.
pub fn format_real(x: f64) -> String {
    if x.is_nan() {
        "NA".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// One row of `evidence.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecord {
    pub model_k: usize,
    pub log_evidence: f64,
    pub n_intermediate_distributions: usize,
    pub wall_seconds: f64,
    pub seed: u64,
}

impl ModelRecord {
    pub fn new(m: &ModelEvidence, seed: u64) -> Self {
        Self {
            model_k: m.k,
            log_evidence: m.log_evidence,
            n_intermediate_distributions: m.n_intermediate,
            wall_seconds: m.wall_seconds,
            seed,
        }
    }
}

/// One row of the per-stage coalescent trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub t: usize,
    pub log_evidence: f64,
    pub n_intermediate: usize,
    pub ess_min: f64,
    pub accept_theta: Option<f64>,
    pub accept_height: Option<f64>,
    pub accept_spr: Option<f64>,
    pub wall_seconds: f64,
    pub newick: String,
}

impl StageRecord {
    pub fn new(s: &StageResult) -> Self {
        Self {
            t: s.t,
            log_evidence: s.log_evidence,
            n_intermediate: s.n_intermediate,
            ess_min: s.ess_min,
            accept_theta: finite(s.accept_theta),
            accept_height: finite(s.accept_height),
            accept_spr: finite(s.accept_spr),
            wall_seconds: s.wall_seconds,
            newick: s.consensus.to_newick(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunResults {
    None,
    Models(Vec<ModelRecord>),
    Stages(Vec<StageRecord>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    Failed,
}

/// Record of a run: configuration, input fingerprint, results and traces.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config: RunConfig,
    /// `sha256` git-blob hash of the input data file.
    pub input_hash: Option<String>,
    pub status: RunStatus,
    pub error: Option<String>,
    pub results: RunResults,
    pub trace: Vec<TraceRow>,
    pub wall_seconds: f64,
}

impl RunManifest {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        fs::write(&path, self.to_json()?).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }
}

fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_error(path, e))?;
    w.write_record(header).map_err(|e| csv_error(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::io(path, std::io::Error::other(format!("{other:?}"))),
    }
}

/// `evidence.csv`. With `deterministic` the timing column is `NA`, so that
/// reruns with the same seed give identical files.
pub fn write_evidence_csv(dir: &Path, rows: &[ModelRecord], deterministic: bool) -> Result<PathBuf> {
    let path = dir.join("evidence.csv");
    write_csv(
        &path,
        &["model_k", "log_evidence", "n_intermediate_distributions", "wall_seconds", "seed"],
        rows.iter().map(|r| {
            vec![
                r.model_k.to_string(),
                format_real(r.log_evidence),
                r.n_intermediate_distributions.to_string(),
                if deterministic {
                    "NA".into()
                } else {
                    format_real(r.wall_seconds)
                },
                r.seed.to_string(),
            ]
        }),
    )?;
    Ok(path)
}

/// Per-stage coalescent trace, `trace.csv`.
pub fn write_stage_trace_csv(dir: &Path, rows: &[StageRecord]) -> Result<PathBuf> {
    let path = dir.join("trace.csv");
    let opt = |x: Option<f64>| x.map_or_else(|| "NA".to_string(), format_real);
    write_csv(
        &path,
        &["t", "log_evidence", "n_intermediate", "ess_min", "accept_theta", "accept_height", "accept_spr"],
        rows.iter().map(|r| {
            vec![
                r.t.to_string(),
                format_real(r.log_evidence),
                r.n_intermediate.to_string(),
                format_real(r.ess_min),
                opt(r.accept_theta),
                opt(r.accept_height),
                opt(r.accept_spr),
            ]
        }),
    )?;
    Ok(path)
}

/// Every intermediate distribution, `steps.csv`.
pub fn write_steps_csv(dir: &Path, rows: &[TraceRow]) -> Result<PathBuf> {
    let path = dir.join("steps.csv");
    write_csv(
        &path,
        &["t", "step", "gamma", "ess", "cess", "resampled", "log_evidence", "acceptance"],
        rows.iter().map(|r| {
            vec![
                r.t.to_string(),
                r.k.to_string(),
                format_real(r.gamma),
                format_real(r.ess),
                format_real(r.cess),
                r.resampled.to_string(),
                format_real(r.log_evidence),
                format_real(r.acceptance),
            ]
        }),
    )?;
    Ok(path)
}

/// `consensus_t<t>.nwk`.
pub fn write_consensus(dir: &Path, record: &StageRecord) -> Result<PathBuf> {
    let path = dir.join(format!("consensus_t{}.nwk", record.t));
    fs::write(&path, format!("{}\n", record.newick)).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}
