//! Densities connected by a geometric bridge, and the move kernels that
//! target points along it.

use super::cloud::{ParticleCloud, ParticleRng};

/// An unnormalised log-density.
pub trait TargetDensity<S>: Sync {
    fn log_density(&self, state: &S) -> f64;
}

impl<S, F> TargetDensity<S> for F
where
    F: Fn(&S) -> f64 + Sync,
{
    fn log_density(&self, state: &S) -> f64 {
        self(state)
    }
}

/// One transition of a transformation SMC sampler.
///
/// Particles arrive from the previous target and are pushed through
/// [`BridgeSpec::transform`] (which draws any auxiliary variables). Both
/// densities are then evaluated on the destination space: `log_target_from`
/// is the density of the pushed-forward particles, i.e. the previous target
/// times the auxiliary proposal divided by the absolute Jacobian of the
/// transformation, and `log_target_to` is the next target.
pub trait BridgeSpec<S>: Sync {
    fn log_target_from(&self, state: &S) -> f64;

    fn log_target_to(&self, state: &S) -> f64;

    /// Move a particle into the destination space. Identity by default.
    fn transform(&self, state: &S, rng: &mut ParticleRng) -> S
    where
        S: Clone,
    {
        let _ = rng;
        state.clone()
    }

    /// `log φ_to − log φ_from`, with any non-finite result mapped to `-inf`
    /// so that the particle is dropped rather than poisoning the cloud.
    fn log_ratio(&self, state: &S) -> f64 {
        let to = self.log_target_to(state);
        if to == f64::NEG_INFINITY || to.is_nan() {
            return f64::NEG_INFINITY;
        }
        let from = self.log_target_from(state);
        let d = to - from;
        if d.is_finite() {
            d
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// `φ_from^{1-γ} φ_to^γ`.
pub struct Tempered<'a, B: ?Sized> {
    pub bridge: &'a B,
    pub gamma: f64,
}

impl<'a, B: ?Sized> Tempered<'a, B> {
    pub fn new(bridge: &'a B, gamma: f64) -> Self {
        Self { bridge, gamma }
    }
}

impl<S, B: BridgeSpec<S> + ?Sized> TargetDensity<S> for Tempered<'_, B> {
    fn log_density(&self, state: &S) -> f64 {
        if self.gamma >= 1.0 {
            return self.bridge.log_target_to(state);
        }
        let from = self.bridge.log_target_from(state);
        if self.gamma <= 0.0 || from == f64::NEG_INFINITY {
            return from;
        }
        let to = self.bridge.log_target_to(state);
        if to == f64::NEG_INFINITY {
            return to;
        }
        self.gamma * to + (1.0 - self.gamma) * from
    }
}

/// A bridge assembled from closures, with identity transformation.
pub struct FnBridge<F, G> {
    pub from: F,
    pub to: G,
}

impl<S, F, G> BridgeSpec<S> for FnBridge<F, G>
where
    F: Fn(&S) -> f64 + Sync,
    G: Fn(&S) -> f64 + Sync,
{
    fn log_target_from(&self, state: &S) -> f64 {
        (self.from)(state)
    }

    fn log_target_to(&self, state: &S) -> f64 {
        (self.to)(state)
    }
}

/// Outcome of one application of a move kernel to a cloud.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct MoveReport {
    pub proposed: usize,
    pub accepted: usize,
}

impl MoveReport {
    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn moved(&self) -> bool {
        self.accepted > 0
    }
}

/// A Markov kernel applied to every particle, invariant for `target`.
///
/// Kernels may adapt their proposals from the current weighted cloud before
/// moving it; that is the only synchronisation point.
pub trait MoveKernel<S> {
    fn apply(&mut self, cloud: &mut ParticleCloud<S>, target: &dyn TargetDensity<S>) -> MoveReport;
}

/// Kernel that leaves every particle in place.
#[derive(Debug, Clone, Copy, Default)]
pub struct NoMove;

impl<S> MoveKernel<S> for NoMove {
    fn apply(&mut self, _cloud: &mut ParticleCloud<S>, _target: &dyn TargetDensity<S>) -> MoveReport {
        MoveReport::default()
    }
}
