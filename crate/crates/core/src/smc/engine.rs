use log::warn;
use serde::{Deserialize, Serialize};

use super::bridge::{BridgeSpec, MoveKernel, Tempered};
use super::cloud::ParticleCloud;
use super::weights::{cess_log, Reduction};
use crate::error::{Error, Result};

/// Sampler tunables shared by every transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmcConfig {
    pub particle_count: usize,
    /// Resample when ESS < `resample_threshold * P`.
    pub resample_threshold: f64,
    /// Place the next bridge exponent where CESS = `cess_target * P`.
    pub cess_target: f64,
    pub mcmc_sweeps_per_step: usize,
    pub seed: u64,
    pub deterministic_reduction: bool,
}

impl Default for SmcConfig {
    fn default() -> Self {
        Self {
            particle_count: 500,
            resample_threshold: 0.5,
            cess_target: 0.99,
            mcmc_sweeps_per_step: 1,
            seed: 0,
            deterministic_reduction: true,
        }
    }
}

impl SmcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.particle_count == 0 {
            return Err(Error::config("particle_count", "must be at least 1"));
        }
        if !(self.resample_threshold > 0.0 && self.resample_threshold < 1.0) {
            return Err(Error::config("resample_threshold", "out of range (0,1)"));
        }
        if !(self.cess_target > 0.0 && self.cess_target < 1.0) {
            return Err(Error::config("cess_target", "cess_target out of range (0,1)"));
        }
        if self.mcmc_sweeps_per_step == 0 {
            return Err(Error::config("mcmc_sweeps_per_step", "must be at least 1"));
        }
        Ok(())
    }
}

/// How bridge exponents are chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum GammaSchedule {
    /// Solve CESS(γ) = βP at every step.
    Adaptive,
    /// Use the given strictly increasing ladder; it must end at 1.
    Fixed(Vec<f64>),
}

/// When the cloud is resampled.
#[derive(Debug, Clone, PartialEq)]
pub enum ResampleSchedule {
    /// After reweighting, whenever ESS < αP.
    EssBelowThreshold,
    /// Resample after step `k` iff `steps[k]` (missing entries mean no).
    Fixed(Vec<bool>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub gamma: GammaSchedule,
    pub resample: ResampleSchedule,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            gamma: GammaSchedule::Adaptive,
            resample: ResampleSchedule::EssBelowThreshold,
        }
    }
}

/// One intermediate distribution of one transition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: usize,
    pub k: usize,
    pub gamma: f64,
    pub ess: f64,
    pub cess: f64,
    pub resampled: bool,
    pub log_evidence: f64,
    pub acceptance: f64,
}

/// Summary of a full bridge from γ = 0 to γ = 1.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BridgeReport {
    pub gammas: Vec<f64>,
    pub trace: Vec<TraceRow>,
    pub log_evidence_increment: f64,
    pub min_ess: f64,
    pub resample_count: usize,
}

impl BridgeReport {
    /// Number of reweighting steps, i.e. intermediate distributions
    /// including the terminal one.
    pub fn n_intermediate(&self) -> usize {
        self.trace.len()
    }
}

fn scaled(step: f64, diff: f64) -> f64 {
    if step == 0.0 {
        0.0
    } else {
        step * diff
    }
}

fn log_cess_at(log_w: &[f64], diffs: &[f64], step: f64, reduction: Reduction) -> f64 {
    let incr: Vec<f64> = diffs.iter().map(|d| scaled(step, *d)).collect();
    match cess_log(log_w, &incr, reduction) {
        Ok(c) => c.ln(),
        Err(_) => f64::NEG_INFINITY,
    }
}

const CESS_REL_TOL: f64 = 1e-9;
const MAX_BISECTIONS: usize = 100;

/// Next exponent from cached log-ratios `diffs[p] = log φ_to − log φ_from`.
///
/// Returns 1 when the terminal step keeps CESS ≥ βP. Otherwise bisects on
/// the step size for CESS = βP (relative tolerance 1e-9 on CESS/P). Always
/// returns a value strictly above `gamma_current`.
pub fn next_gamma_from_diffs(
    log_weights: &[f64],
    diffs: &[f64],
    gamma_current: f64,
    beta: f64,
    reduction: Reduction,
) -> f64 {
    let p = log_weights.len() as f64;
    let log_target = (beta * p).ln();
    let max_step = 1.0 - gamma_current;
    if log_cess_at(log_weights, diffs, max_step, reduction) >= log_target {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0f64, max_step);
    for _ in 0..MAX_BISECTIONS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let c = log_cess_at(log_weights, diffs, mid, reduction);
        if c >= log_target {
            lo = mid;
            if (c.exp() - beta * p).abs() <= CESS_REL_TOL * p {
                break;
            }
        } else {
            hi = mid;
        }
    }
    if lo > 0.0 {
        (gamma_current + lo).min(1.0).max(gamma_current.next_up())
    } else {
        warn!(
            "CESS target unreachable by any positive step at gamma={gamma_current}; taking minimal step"
        );
        (gamma_current + hi).max(gamma_current.next_up()).min(1.0)
    }
}

/// Bisect for the exponent that brings the CESS of `cloud` to `beta * P`.
pub fn find_next_gamma<S: Sync, B: BridgeSpec<S>>(
    cloud: &ParticleCloud<S>,
    bridge: &B,
    gamma_current: f64,
    beta: f64,
) -> f64 {
    let diffs = cloud.map_states(|s| bridge.log_ratio(s));
    next_gamma_from_diffs(cloud.log_weights(), &diffs, gamma_current, beta, cloud.reduction())
}

/// Outcome of a single [`bridge_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub cess: f64,
    pub ess: f64,
    pub resampled: bool,
    pub log_evidence_increment: f64,
    pub acceptance: f64,
}

/// Reweight from `gamma_current` to `gamma_next`, resample if the schedule
/// asks for it, then run `mcmc_sweeps_per_step` kernel applications
/// targeting the bridge at `gamma_next`.
#[allow(clippy::too_many_arguments)]
pub fn bridge_step<S, B, K>(
    cloud: &mut ParticleCloud<S>,
    bridge: &B,
    kernel: &mut K,
    config: &SmcConfig,
    gamma_current: f64,
    gamma_next: f64,
    diffs: &[f64],
    resample: Option<bool>,
) -> Result<StepOutcome>
where
    S: Clone + Send + Sync,
    B: BridgeSpec<S>,
    K: MoveKernel<S> + ?Sized,
{
    let step = gamma_next - gamma_current;
    let incr: Vec<f64> = diffs.iter().map(|d| scaled(step, *d)).collect();
    let cess = cess_log(cloud.log_weights(), &incr, cloud.reduction())?;
    let inc = cloud.normalize_and_accumulate(&incr)?;
    let ess = cloud.ess()?;
    let resampled =
        resample.unwrap_or(ess < config.resample_threshold * config.particle_count as f64);
    if resampled {
        cloud.resample()?;
    }
    let target = Tempered::new(bridge, gamma_next);
    let mut proposed = 0;
    let mut accepted = 0;
    for _ in 0..config.mcmc_sweeps_per_step {
        let r = kernel.apply(cloud, &target);
        proposed += r.proposed;
        accepted += r.accepted;
    }
    Ok(StepOutcome {
        cess,
        ess,
        resampled,
        log_evidence_increment: inc,
        acceptance: if proposed == 0 {
            0.0
        } else {
            accepted as f64 / proposed as f64
        },
    })
}

/// Anneal `cloud` from `φ_from` (γ = 0) to `φ_to` (γ = 1). The particles must
/// already be in the destination space.
pub fn run_bridge<S, B, K>(
    cloud: &mut ParticleCloud<S>,
    bridge: &B,
    kernel: &mut K,
    config: &SmcConfig,
    schedule: &Schedule,
    stage: usize,
) -> Result<BridgeReport>
where
    S: Clone + Send + Sync,
    B: BridgeSpec<S>,
    K: MoveKernel<S> + ?Sized,
{
    if cloud.len() != config.particle_count {
        return Err(Error::DimensionMismatch(format!(
            "cloud has {} particles, config expects {}",
            cloud.len(),
            config.particle_count
        )));
    }
    if let GammaSchedule::Fixed(ladder) = &schedule.gamma {
        let increasing = ladder.windows(2).all(|w| w[1] > w[0]);
        if ladder.is_empty() || !increasing || ladder[0] <= 0.0 || *ladder.last().unwrap() != 1.0 {
            return Err(Error::InvalidArgument(
                "fixed ladder must be strictly increasing in (0, 1] and end at 1".into(),
            ));
        }
    }
    let start = cloud.log_evidence();
    let mut report = BridgeReport {
        min_ess: f64::INFINITY,
        ..Default::default()
    };
    let mut gamma = 0.0;
    let mut k = 0;
    while gamma < 1.0 {
        let diffs = cloud.map_states(|s| bridge.log_ratio(s));
        let next = match &schedule.gamma {
            GammaSchedule::Adaptive => next_gamma_from_diffs(
                cloud.log_weights(),
                &diffs,
                gamma,
                config.cess_target,
                cloud.reduction(),
            ),
            GammaSchedule::Fixed(ladder) => ladder[k],
        };
        let resample = match &schedule.resample {
            ResampleSchedule::EssBelowThreshold => None,
            ResampleSchedule::Fixed(steps) => Some(steps.get(k).copied().unwrap_or(false)),
        };
        let out = bridge_step(cloud, bridge, kernel, config, gamma, next, &diffs, resample)?;
        gamma = next;
        k += 1;
        report.min_ess = report.min_ess.min(out.ess);
        report.resample_count += usize::from(out.resampled);
        report.gammas.push(gamma);
        report.trace.push(TraceRow {
            t: stage,
            k,
            gamma,
            ess: out.ess,
            cess: out.cess,
            resampled: out.resampled,
            log_evidence: cloud.log_evidence(),
            acceptance: out.acceptance,
        });
    }
    report.log_evidence_increment = cloud.log_evidence() - start;
    Ok(report)
}

/// Per-stage record of [`run_transformation_sequence`].
#[derive(Debug, Clone, PartialEq)]
pub struct StageSnapshot {
    pub stage: usize,
    pub log_evidence: f64,
    pub report: BridgeReport,
}

/// Run a sequence of transitions. For each stage every particle is moved by
/// the stage's transformation, then annealed to the stage's target; the
/// running log-evidence is recorded after the last reweight. `observe` sees
/// the cloud at the end of each stage.
pub fn run_transformation_sequence<S, B, K, I, O>(
    mut cloud: ParticleCloud<S>,
    stages: I,
    config: &SmcConfig,
    schedule: &Schedule,
    mut observe: O,
) -> Result<(ParticleCloud<S>, Vec<StageSnapshot>)>
where
    S: Clone + Send + Sync,
    B: BridgeSpec<S>,
    K: MoveKernel<S>,
    I: IntoIterator<Item = (B, K)>,
    O: FnMut(usize, &ParticleCloud<S>),
{
    config.validate()?;
    let mut snapshots = Vec::new();
    for (t, (bridge, mut kernel)) in stages.into_iter().enumerate() {
        cloud.for_each_particle(|_, s, rng| *s = bridge.transform(s, rng));
        let report = run_bridge(&mut cloud, &bridge, &mut kernel, config, schedule, t)?;
        snapshots.push(StageSnapshot {
            stage: t,
            log_evidence: cloud.log_evidence(),
            report,
        });
        observe(t, &cloud);
    }
    Ok((cloud, snapshots))
}
