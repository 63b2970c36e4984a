use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use super::alignment::SeqAlignment;
use super::bridge::{sample_prior_state, CoalPriorToPosterior, CoalState, InsertionBridge};
use super::consensus::{majority_consensus, ConsensusTree};
use super::mcmc::CoalMcmc;
use super::proposal::ProposalConfig;
use crate::error::{Error, Result};
use crate::smc::{run_bridge, BridgeReport, BridgeSpec, ParticleCloud, Schedule, SmcConfig, TraceRow};

/// Settings for online tree inference.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OnlineConfig {
    pub smc: SmcConfig,
    pub proposal: ProposalConfig,
}

impl Default for OnlineConfig {
    fn default() -> Self {
        Self {
            smc: SmcConfig {
                particle_count: 250,
                cess_target: 0.95,
                ..SmcConfig::default()
            },
            proposal: ProposalConfig::default(),
        }
    }
}

/// Summary after the first `t` sequences have been added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageResult {
    pub t: usize,
    pub log_evidence: f64,
    pub n_intermediate: usize,
    pub ess_min: f64,
    pub accept_theta: f64,
    pub accept_height: f64,
    pub accept_spr: f64,
    pub wall_seconds: f64,
    pub consensus: ConsensusTree,
    pub trace: Vec<TraceRow>,
}

fn stage_result(
    t: usize,
    cloud: &ParticleCloud<CoalState>,
    report: BridgeReport,
    kernel: &CoalMcmc,
    names: &[String],
    start: Instant,
) -> Result<StageResult> {
    let trees: Vec<_> = cloud.states().iter().map(|s| &s.tree).collect();
    let consensus = majority_consensus(&trees, &cloud.normalized_weights(), &names[..t])?;
    let acc = kernel.totals();
    Ok(StageResult {
        t,
        log_evidence: cloud.log_evidence(),
        n_intermediate: report.n_intermediate(),
        ess_min: report.min_ess,
        accept_theta: acc.theta_rate(),
        accept_height: acc.height_rate(),
        accept_spr: acc.spr_rate(),
        wall_seconds: start.elapsed().as_secs_f64(),
        consensus,
        trace: report.trace,
    })
}

/// Add the sequences of `alignment` one at a time, in row order.
///
/// The first two are handled by annealing from the prior; every later
/// sequence is inserted into each particle's tree by the lineage-then-height
/// proposal and followed by an adaptive bridge. `on_stage` sees each
/// stage's result as soon as it is available.
pub fn run_online_inference<F>(alignment: &SeqAlignment, config: &OnlineConfig, mut on_stage: F) -> Result<Vec<StageResult>>
where
    F: FnMut(&StageResult),
{
    config.smc.validate()?;
    config.proposal.validate()?;
    if alignment.len() < 2 {
        return Err(Error::InvalidArgument("online inference needs at least two sequences".into()));
    }
    let smc = &config.smc;
    let names = alignment.names();
    let schedule = Schedule::default();
    let mut out = Vec::new();

    let start = Instant::now();
    let mut cloud = ParticleCloud::from_fn(smc.particle_count, smc.seed, smc.deterministic_reduction, |rng| {
        sample_prior_state(2, rng)
    })?;
    let mut kernel = CoalMcmc::new(config.proposal.spr_moves_per_sweep);
    let bridge = CoalPriorToPosterior {
        patterns: alignment.patterns(2),
    };
    let report = run_bridge(&mut cloud, &bridge, &mut kernel, smc, &schedule, 2)?;
    let stage = stage_result(2, &cloud, report, &kernel, names, start)?;
    info!("t=2 log evidence {:.6}", stage.log_evidence);
    on_stage(&stage);
    out.push(stage);

    for t in 2..alignment.len() {
        let start = Instant::now();
        let bridge = InsertionBridge::new(alignment, t, config.proposal);
        cloud.for_each_particle(|_, s, rng| *s = bridge.transform(s, rng));
        let mut kernel = CoalMcmc::new(config.proposal.spr_moves_per_sweep);
        let report = run_bridge(&mut cloud, &bridge, &mut kernel, smc, &schedule, t + 1).map_err(|e| match e {
            Error::DegenerateCloud(msg) => Error::DegenerateCloud(format!("adding sequence {}: {msg}", t + 1)),
            other => other,
        })?;
        let stage = stage_result(t + 1, &cloud, report, &kernel, names, start)?;
        info!("t={} log evidence {:.6}", t + 1, stage.log_evidence);
        on_stage(&stage);
        out.push(stage);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_run_produces_every_stage() {
        let aln = SeqAlignment::from_strings(&[
            ("a", "ACGTACGTACGTACGTACGT"),
            ("b", "ACGTACGTACGTACGTACGA"),
            ("c", "ACGTTCGTACGAACGTACGA"),
            ("d", "TCGTTCGTACGAACGTACCA"),
        ])
        .unwrap();
        let config = OnlineConfig {
            smc: SmcConfig {
                particle_count: 40,
                cess_target: 0.9,
                seed: 3,
                ..OnlineConfig::default().smc
            },
            proposal: ProposalConfig {
                spr_moves_per_sweep: 2,
                ..ProposalConfig::default()
            },
        };
        let mut seen = 0;
        let stages = run_online_inference(&aln, &config, |_| seen += 1).unwrap();
        assert_eq!(seen, 3);
        assert_eq!(stages.iter().map(|s| s.t).collect::<Vec<_>>(), vec![2, 3, 4]);
        for s in &stages {
            assert!(s.log_evidence.is_finite());
            assert_eq!(s.consensus.leaf_names().len(), s.t);
        }
        // each extra sequence costs at least log(1/4) per site in evidence
        assert!(stages[2].log_evidence < stages[0].log_evidence);
    }
}
