//! Configuration, data ingestion and result files for the command-line
//! tool.

mod config;
mod load;
mod output;
mod run;

pub use config::{parse_config, parse_pairs, Command, RunConfig, SchemeName, CONFIG_KEYS};
pub use load::{load_alignment, load_observations, parse_alignment, parse_observations};
pub use output::{
    format_real, git_blob_sha256, write_consensus, write_evidence_csv, write_stage_trace_csv,
    write_steps_csv, ModelRecord, RunManifest, RunResults, RunStatus, StageRecord,
};
pub use run::{execute, RunOutcome};
