//! Evidence estimation across models `k = 1, …, T`: the prior-to-posterior
//! baseline for a single `k`, and the transformation sampler that carries one
//! cloud through every model.

use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use super::birth::{birth_log_pushforward, birth_transform, sample_birth_aux};
use super::density::{log_posterior_unnorm, log_prior, sample_prior};
use super::mcmc::{McmcScheme, MixtureRandomWalk};
use super::mixture::{GmmData, MixtureState};
use super::split::{sample_split_aux, split_log_pushforward, split_transform};
use super::{MoveKind, WeightMode};
use crate::error::{Error, Result};
use crate::smc::{run_bridge, BridgeSpec, ParticleCloud, ParticleRng, Schedule, SmcConfig, TraceRow};

/// Label produced by the last trans-dimensional move, kept for the
/// conditional weight mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Route {
    None,
    /// 0-based position of the born component.
    Birth { label: usize },
    /// 0-based positions of the two components created by a split.
    Split { pair: (usize, usize) },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmParticle {
    pub mix: MixtureState,
    pub route: Route,
}

impl GmmParticle {
    pub fn new(mix: MixtureState) -> Self {
        Self {
            mix,
            route: Route::None,
        }
    }
}

/// Identity transformation from the prior of model `k` to its posterior.
pub struct PriorToPosterior<'a> {
    pub data: &'a GmmData,
}

impl BridgeSpec<GmmParticle> for PriorToPosterior<'_> {
    fn log_target_from(&self, p: &GmmParticle) -> f64 {
        log_prior(&p.mix, self.data)
    }

    fn log_target_to(&self, p: &GmmParticle) -> f64 {
        log_posterior_unnorm(&p.mix, self.data)
    }
}

/// `k → k+1` by adding a component.
pub struct BirthBridge<'a> {
    pub data: &'a GmmData,
    pub mode: WeightMode,
}

impl BridgeSpec<GmmParticle> for BirthBridge<'_> {
    fn log_target_from(&self, p: &GmmParticle) -> f64 {
        let label = match p.route {
            Route::Birth { label } => Some(label),
            _ => None,
        };
        birth_log_pushforward(&p.mix, label, self.mode, self.data)
    }

    fn log_target_to(&self, p: &GmmParticle) -> f64 {
        log_posterior_unnorm(&p.mix, self.data)
    }

    fn transform(&self, p: &GmmParticle, rng: &mut ParticleRng) -> GmmParticle {
        let aux = sample_birth_aux(p.mix.k(), self.data, rng);
        let (mix, label) = birth_transform(&p.mix, &aux);
        GmmParticle {
            mix,
            route: Route::Birth { label },
        }
    }
}

/// `k → k+1` by splitting a component.
pub struct SplitBridge<'a> {
    pub data: &'a GmmData,
    pub mode: WeightMode,
}

impl BridgeSpec<GmmParticle> for SplitBridge<'_> {
    fn log_target_from(&self, p: &GmmParticle) -> f64 {
        let pair = match p.route {
            Route::Split { pair } => Some(pair),
            _ => None,
        };
        split_log_pushforward(&p.mix, pair, self.mode, self.data)
    }

    fn log_target_to(&self, p: &GmmParticle) -> f64 {
        log_posterior_unnorm(&p.mix, self.data)
    }

    fn transform(&self, p: &GmmParticle, rng: &mut ParticleRng) -> GmmParticle {
        let aux = sample_split_aux(p.mix.k(), rng);
        let (mix, pair) = split_transform(&p.mix, &aux);
        GmmParticle {
            mix,
            route: Route::Split { pair },
        }
    }
}

/// Everything needed for a sweep over models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmRunConfig {
    pub smc: SmcConfig,
    pub move_kind: MoveKind,
    pub weight_mode: WeightMode,
    pub scheme: McmcScheme,
    /// Largest number of components visited.
    pub t_max: usize,
}

impl Default for GmmRunConfig {
    fn default() -> Self {
        Self {
            smc: SmcConfig::default(),
            move_kind: MoveKind::Split,
            weight_mode: WeightMode::Marginal,
            scheme: McmcScheme::CovarianceScaled,
            t_max: 5,
        }
    }
}

/// Log marginal likelihood of one model together with run diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEvidence {
    pub k: usize,
    pub log_evidence: f64,
    /// Intermediate distributions used by the bridge that reached model `k`.
    pub n_intermediate: usize,
    pub min_ess: f64,
    pub wall_seconds: f64,
    pub trace: Vec<TraceRow>,
}

fn prior_cloud(k: usize, data: &GmmData, config: &SmcConfig) -> Result<ParticleCloud<GmmParticle>> {
    ParticleCloud::from_fn(
        config.particle_count,
        config.seed,
        config.deterministic_reduction,
        |rng| GmmParticle::new(sample_prior(k, data, rng)),
    )
}

fn anneal_to_posterior(
    cloud: &mut ParticleCloud<GmmParticle>,
    data: &GmmData,
    config: &SmcConfig,
    scheme: McmcScheme,
) -> Result<ModelEvidence> {
    let start = Instant::now();
    let k = cloud.states()[0].mix.k();
    let mut kernel = MixtureRandomWalk::new(scheme);
    let report = run_bridge(
        cloud,
        &PriorToPosterior { data },
        &mut kernel,
        config,
        &Schedule::default(),
        k,
    )?;
    Ok(ModelEvidence {
        k,
        log_evidence: cloud.log_evidence(),
        n_intermediate: report.n_intermediate(),
        min_ess: report.min_ess,
        wall_seconds: start.elapsed().as_secs_f64(),
        trace: report.trace,
    })
}

/// Evidence of the `k`-component model by annealing from its prior to its
/// posterior.
pub fn smc2_baseline(k: usize, data: &GmmData, config: &SmcConfig, scheme: McmcScheme) -> Result<ModelEvidence> {
    if k == 0 {
        return Err(Error::InvalidArgument("model needs at least one component".into()));
    }
    config.validate()?;
    let mut cloud = prior_cloud(k, data, config)?;
    anneal_to_posterior(&mut cloud, data, config, scheme)
}

/// Evidence of models `1..=t_max`. Model 1 is reached from its prior; each
/// further model by the configured move and weight mode followed by an
/// adaptive bridge.
pub fn tsmc_model_sweep(data: &GmmData, run: &GmmRunConfig) -> Result<Vec<ModelEvidence>> {
    if run.t_max == 0 {
        return Err(Error::config("t_max", "must be at least 1"));
    }
    let config = &run.smc;
    config.validate()?;
    let mut cloud = prior_cloud(1, data, config)?;
    let mut out = vec![anneal_to_posterior(&mut cloud, data, config, run.scheme)?];
    info!("k=1 log evidence {:.6}", cloud.log_evidence());
    for k in 2..=run.t_max {
        let start = Instant::now();
        let mut kernel = MixtureRandomWalk::new(run.scheme);
        let report = match run.move_kind {
            MoveKind::Birth => {
                let bridge = BirthBridge {
                    data,
                    mode: run.weight_mode,
                };
                cloud.for_each_particle(|_, s, rng| *s = bridge.transform(s, rng));
                run_bridge(&mut cloud, &bridge, &mut kernel, config, &Schedule::default(), k)
            }
            MoveKind::Split => {
                let bridge = SplitBridge {
                    data,
                    mode: run.weight_mode,
                };
                cloud.for_each_particle(|_, s, rng| *s = bridge.transform(s, rng));
                run_bridge(&mut cloud, &bridge, &mut kernel, config, &Schedule::default(), k)
            }
        }
        .map_err(|e| match e {
            Error::DegenerateCloud(msg) => {
                Error::DegenerateCloud(format!("transition {} -> {k}: {msg}", k - 1))
            }
            other => other,
        })?;
        info!("k={k} log evidence {:.6}", cloud.log_evidence());
        out.push(ModelEvidence {
            k,
            log_evidence: cloud.log_evidence(),
            n_intermediate: report.n_intermediate(),
            min_ess: report.min_ess,
            wall_seconds: start.elapsed().as_secs_f64(),
            trace: report.trace,
        });
    }
    Ok(out)
}
