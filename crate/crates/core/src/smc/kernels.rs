use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;

use super::bridge::{MoveKernel, MoveReport, TargetDensity};
use super::cloud::ParticleCloud;

/// Scalar Gaussian random-walk Metropolis with a fixed step size.
#[derive(Debug, Clone, Copy)]
pub struct ScalarRandomWalk {
    pub step: f64,
}

impl MoveKernel<f64> for ScalarRandomWalk {
    fn apply(&mut self, cloud: &mut ParticleCloud<f64>, target: &dyn TargetDensity<f64>) -> MoveReport {
        let accepted = AtomicUsize::new(0);
        let step = self.step;
        cloud.for_each_particle(|_, x, rng| {
            let z: f64 = rng.sample(StandardNormal);
            let proposal = *x + step * z;
            let log_ratio = target.log_density(&proposal) - target.log_density(x);
            let u: f64 = rng.random();
            if u.ln() < log_ratio {
                *x = proposal;
                accepted.fetch_add(1, Ordering::Relaxed);
            }
        });
        MoveReport {
            proposed: cloud.len(),
            accepted: accepted.into_inner(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_step_always_accepts_and_never_moves() {
        let mut cloud = ParticleCloud::from_states(vec![0.3, -1.0, 2.0], 9, true).unwrap();
        let target = |x: &f64| -0.5 * x * x;
        let r = ScalarRandomWalk { step: 0.0 }.apply(&mut cloud, &target);
        assert_eq!(r.accepted, 3);
        assert_eq!(cloud.states(), &[0.3, -1.0, 2.0]);
    }
}
