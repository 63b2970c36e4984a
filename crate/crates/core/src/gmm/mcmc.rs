//! Random-walk Metropolis for mixture parameters in the unconstrained
//! coordinates `(log(w_j / w_k))_{j<k}, μ, log τ`.

use std::sync::atomic::{AtomicUsize, Ordering};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mixture::MixtureState;
use super::sampler::GmmParticle;
use crate::smc::{MoveKernel, MoveReport, ParticleCloud, TargetDensity};

/// Acceptance rate that [`McmcScheme::AcceptanceTuned`] aims for.
pub const ACCEPTANCE_TARGET: f64 = 0.20;

/// How the proposal covariance is set from the cloud.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub enum McmcScheme {
    /// Start from the diagonal of the weighted particle variances and
    /// rescale by `α̂ / 0.2` between sweeps until `|α̂ − 0.2| ≤ tolerance`
    /// or `max_rounds` sweeps have run. The covariance persists between
    /// calls while the dimension is unchanged.
    AcceptanceTuned { tolerance: f64, max_rounds: usize },
    /// Weighted particle covariance divided by the number of components.
    #[default]
    CovarianceScaled,
}

impl McmcScheme {
    pub fn acceptance_tuned() -> Self {
        Self::AcceptanceTuned {
            tolerance: 0.05,
            max_rounds: 10,
        }
    }
}

/// Map a state to `3k − 1` unconstrained coordinates.
pub fn to_coordinates(state: &MixtureState) -> Vec<f64> {
    let k = state.k();
    let last = state.weights[k - 1].ln();
    let mut x = Vec::with_capacity(3 * k - 1);
    x.extend(state.weights[..k - 1].iter().map(|w| w.ln() - last));
    x.extend_from_slice(&state.means);
    x.extend(state.precisions.iter().map(|t| t.ln()));
    x
}

/// Inverse of [`to_coordinates`]. The result is not reordered.
pub fn from_coordinates(x: &[f64], k: usize) -> MixtureState {
    let lw = &x[..k - 1];
    let max = lw.iter().copied().fold(0.0f64, f64::max);
    let mut weights: Vec<f64> = lw.iter().map(|v| (v - max).exp()).collect();
    weights.push((-max).exp());
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    MixtureState::new_unchecked(
        weights,
        x[k - 1..2 * k - 1].to_vec(),
        x[2 * k - 1..].iter().map(|v| v.exp()).collect(),
    )
}

/// `log |∂(w_1..w_{k−1}, μ, τ) / ∂x|` = `Σ_j log w_j + Σ_j log τ_j`.
pub fn log_coordinate_jacobian(state: &MixtureState) -> f64 {
    state.weights.iter().map(|w| w.ln()).sum::<f64>()
        + state.precisions.iter().map(|t| t.ln()).sum::<f64>()
}

/// `Σ ← (α̂ / 0.2) Σ`. The factor is floored at 0.1 so a sweep with no
/// acceptances shrinks the proposal instead of collapsing it.
pub fn rescale_for_acceptance(sigma: &mut DMatrix<f64>, acceptance: f64) {
    *sigma *= (acceptance / ACCEPTANCE_TARGET).max(0.1);
}

/// Gaussian random-walk Metropolis kernel on [`GmmParticle`]s.
#[derive(Debug, Clone)]
pub struct MixtureRandomWalk {
    pub scheme: McmcScheme,
    sigma: Option<DMatrix<f64>>,
}

impl MixtureRandomWalk {
    pub fn new(scheme: McmcScheme) -> Self {
        Self { scheme, sigma: None }
    }

    /// Current proposal covariance, if one has been set.
    pub fn covariance(&self) -> Option<&DMatrix<f64>> {
        self.sigma.as_ref()
    }

    /// Fix the proposal covariance (used as the starting point by the
    /// acceptance-tuned scheme).
    pub fn set_covariance(&mut self, sigma: DMatrix<f64>) {
        self.sigma = Some(sigma);
    }
}

fn weighted_moments(cloud: &ParticleCloud<GmmParticle>) -> (DVector<f64>, DMatrix<f64>) {
    let coords = cloud.map_states(|p| to_coordinates(&p.mix));
    let w = cloud.normalized_weights();
    let d = coords[0].len();
    let mut mean = DVector::zeros(d);
    for (x, wp) in coords.iter().zip(&w) {
        mean += DVector::from_column_slice(x) * *wp;
    }
    let mut cov = DMatrix::zeros(d, d);
    for (x, wp) in coords.iter().zip(&w) {
        let r = DVector::from_column_slice(x) - &mean;
        cov += &r * r.transpose() * *wp;
    }
    (mean, cov)
}

/// Lower Cholesky factor, adding `1e-10` (then ten times more, repeatedly)
/// to the diagonal while the matrix is not positive definite.
fn regularised_cholesky(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    if let Some(c) = sigma.clone().cholesky() {
        return c.l();
    }
    let d = sigma.nrows();
    let mut jitter = 1e-10;
    loop {
        let m = sigma + DMatrix::identity(d, d) * jitter;
        if let Some(c) = m.cholesky() {
            return c.l();
        }
        jitter *= 10.0;
    }
}

/// One Metropolis step per particle with proposal `x + L z`.
fn sweep(
    cloud: &mut ParticleCloud<GmmParticle>,
    target: &dyn TargetDensity<GmmParticle>,
    chol: &DMatrix<f64>,
) -> MoveReport {
    let accepted = AtomicUsize::new(0);
    let d = chol.nrows();
    cloud.for_each_particle(|_, particle, rng| {
        let k = particle.mix.k();
        let x = DVector::from_vec(to_coordinates(&particle.mix));
        let z = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = &x + chol * z;
        let proposal = GmmParticle {
            mix: from_coordinates(y.as_slice(), k),
            route: particle.route,
        };
        let lp_new = target.log_density(&proposal);
        if lp_new == f64::NEG_INFINITY || lp_new.is_nan() {
            return;
        }
        let lp_old = target.log_density(particle);
        let log_ratio = lp_new + log_coordinate_jacobian(&proposal.mix)
            - lp_old
            - log_coordinate_jacobian(&particle.mix);
        if lp_old == f64::NEG_INFINITY || rng.random::<f64>().ln() < log_ratio {
            *particle = proposal;
            accepted.fetch_add(1, Ordering::Relaxed);
        }
    });
    MoveReport {
        proposed: cloud.len(),
        accepted: accepted.into_inner(),
    }
}

impl MoveKernel<GmmParticle> for MixtureRandomWalk {
    fn apply(
        &mut self,
        cloud: &mut ParticleCloud<GmmParticle>,
        target: &dyn TargetDensity<GmmParticle>,
    ) -> MoveReport {
        let k = cloud.states()[0].mix.k();
        match self.scheme {
            McmcScheme::CovarianceScaled => {
                let (_, cov) = weighted_moments(cloud);
                let sigma = cov / k as f64;
                let chol = regularised_cholesky(&sigma);
                self.sigma = Some(sigma);
                sweep(cloud, target, &chol)
            }
            McmcScheme::AcceptanceTuned {
                tolerance,
                max_rounds,
            } => {
                let d = 3 * k - 1;
                if self.sigma.as_ref().is_none_or(|s| s.nrows() != d) {
                    let (_, cov) = weighted_moments(cloud);
                    self.sigma = Some(DMatrix::from_diagonal(&cov.diagonal()));
                }
                let mut total = MoveReport::default();
                for round in 0..max_rounds.max(1) {
                    let sigma = self.sigma.as_mut().expect("covariance set above");
                    let chol = regularised_cholesky(sigma);
                    let r = sweep(cloud, target, &chol);
                    total.proposed += r.proposed;
                    total.accepted += r.accepted;
                    let acc = r.acceptance_rate();
                    if (acc - ACCEPTANCE_TARGET).abs() <= tolerance {
                        break;
                    }
                    if round + 1 < max_rounds {
                        rescale_for_acceptance(sigma, acc);
                    }
                }
                total
            }
        }
    }
}
