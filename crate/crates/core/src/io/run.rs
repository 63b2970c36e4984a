use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use log::info;

use super::config::{Command, RunConfig};
use super::load::{parse_alignment, parse_observations};
use super::output::{
    git_blob_sha256, write_consensus, write_evidence_csv, write_stage_trace_csv, write_steps_csv,
    ModelRecord, RunManifest, RunResults, RunStatus, StageRecord,
};
use crate::coalescent::{compute_ordering, run_online_inference};
use crate::error::{Error, Result};
use crate::gmm::tsmc_model_sweep;
use crate::smc::TraceRow;

/// Files written by a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub manifest: RunManifest,
    pub files: Vec<PathBuf>,
}

/// Run `config` end to end: load and fingerprint the input, sample, and
/// write the result files into `config.output_dir`.
///
/// `manifest.json` is written whether or not the run succeeds; the error is
/// still returned to the caller.
pub fn execute(config: &RunConfig) -> Result<RunOutcome> {
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let start = Instant::now();
    let mut manifest = RunManifest {
        config: config.clone(),
        input_hash: None,
        status: RunStatus::Failed,
        error: None,
        results: RunResults::None,
        trace: Vec::new(),
        wall_seconds: 0.0,
    };
    let result = run_into(config, &mut manifest);
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    let files = match result {
        Ok(files) => {
            manifest.status = RunStatus::Completed;
            files
        }
        Err(e) => {
            manifest.error = Some(e.to_string());
            manifest.write(dir)?;
            return Err(e);
        }
    };
    let mut files = files;
    files.push(manifest.write(dir)?);
    Ok(RunOutcome { manifest, files })
}

fn run_into(config: &RunConfig, manifest: &mut RunManifest) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let path = &config.data_path;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    manifest.input_hash = Some(git_blob_sha256(&bytes));
    let text = String::from_utf8(bytes).map_err(|_| Error::Parse {
        path: path.clone(),
        line: 0,
        message: "input is not valid UTF-8".into(),
    })?;
    let dir = &config.output_dir;
    match config.command {
        Command::GmmEvidence => {
            let data = parse_observations(&text, path)?;
            info!("{} observations from {}", data.len(), path.display());
            let models = tsmc_model_sweep(&data, &config.gmm())?;
            let records: Vec<ModelRecord> = models.iter().map(|m| ModelRecord::new(m, config.seed)).collect();
            manifest.trace = models.iter().flat_map(|m| m.trace.iter().cloned()).collect();
            manifest.results = RunResults::Models(records.clone());
            Ok(vec![
                write_evidence_csv(dir, &records, config.deterministic)?,
                write_steps_csv(dir, &manifest.trace)?,
            ])
        }
        Command::CoalescentOnline => {
            let raw = parse_alignment(&text, path)?;
            let alignment = raw.reordered(&compute_ordering(&raw, config.ordering))?;
            info!(
                "{} sequences of {} sites, order {:?}",
                alignment.len(),
                alignment.site_count(),
                alignment.names()
            );
            let mut files = Vec::new();
            let mut records = Vec::new();
            let mut trace: Vec<TraceRow> = Vec::new();
            let mut write_error = None;
            run_online_inference(&alignment, &config.online(), |stage| {
                info!(
                    "t = {}: log evidence {:.6}, {} distributions",
                    stage.t, stage.log_evidence, stage.n_intermediate
                );
                let record = StageRecord::new(stage);
                match write_consensus(dir, &record) {
                    Ok(p) => files.push(p),
                    Err(e) => {
                        write_error.get_or_insert(e);
                    }
                }
                trace.extend(stage.trace.iter().cloned());
                records.push(record);
            })?;
            if let Some(e) = write_error {
                return Err(e);
            }
            files.push(write_stage_trace_csv(dir, &records)?);
            files.push(write_steps_csv(dir, &trace)?);
            manifest.trace = trace;
            manifest.results = RunResults::Stages(records);
            Ok(files)
        }
    }
}
