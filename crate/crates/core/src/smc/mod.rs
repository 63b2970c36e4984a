//! Generic SMC sampler engine: weighted clouds, geometric bridges between a
//! pushed-forward density and the next target, CESS-adaptive exponents,
//! stratified resampling and log-evidence accumulation.

mod bridge;
mod cloud;
mod engine;
mod kernels;
mod resample;
mod weights;

pub use bridge::{BridgeSpec, FnBridge, MoveKernel, MoveReport, NoMove, TargetDensity, Tempered};
pub use cloud::{particle_stream, ParticleCloud, ParticleRng};
pub use engine::{
    bridge_step, find_next_gamma, next_gamma_from_diffs, run_bridge, run_transformation_sequence,
    BridgeReport, GammaSchedule, ResampleSchedule, Schedule, SmcConfig, StageSnapshot, StepOutcome,
    TraceRow,
};
pub use kernels::ScalarRandomWalk;
pub use resample::{stratified_from_uniforms, stratified_resample};
pub use weights::{cess, cess_log, ess, ess_with, Reduction};
