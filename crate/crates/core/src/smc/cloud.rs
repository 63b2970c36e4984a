use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::resample::stratified_resample;
use super::weights::{ess_with, Reduction};
use crate::error::{Error, Result};

/// Random stream owned by one particle slot.
pub type ParticleRng = ChaCha8Rng;

const MASTER_STREAM: u64 = u64::MAX;

/// Stream `index` of the counter-based generator keyed by `seed`. Streams
/// are independent of each other and of evaluation order.
pub fn particle_stream(seed: u64, index: u64) -> ParticleRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// A weighted particle approximation with its running evidence estimate.
///
/// Log-weights are kept normalised (`log Σ exp = 0`). Each slot owns a random
/// stream that stays with the slot through resampling, so the randomness a
/// slot consumes does not depend on how work is scheduled.
#[derive(Debug, Clone)]
pub struct ParticleCloud<S> {
    states: Vec<S>,
    log_weights: Vec<f64>,
    log_evidence: f64,
    streams: Vec<ParticleRng>,
    master: ParticleRng,
    reduction: Reduction,
}

impl<S> ParticleCloud<S> {
    /// Equally weighted cloud of `count` particles, each drawn by `init` from
    /// its own stream.
    pub fn from_fn<F>(count: usize, seed: u64, deterministic: bool, mut init: F) -> Result<Self>
    where
        F: FnMut(&mut ParticleRng) -> S,
    {
        if count == 0 {
            return Err(Error::InvalidArgument("particle count must be positive".into()));
        }
        let mut streams: Vec<ParticleRng> =
            (0..count as u64).map(|p| particle_stream(seed, p)).collect();
        let states = streams.iter_mut().map(&mut init).collect();
        Ok(Self::assemble(states, streams, seed, deterministic))
    }

    /// Equally weighted cloud from explicit states.
    pub fn from_states(states: Vec<S>, seed: u64, deterministic: bool) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("particle count must be positive".into()));
        }
        let streams = (0..states.len() as u64).map(|p| particle_stream(seed, p)).collect();
        Ok(Self::assemble(states, streams, seed, deterministic))
    }

    fn assemble(states: Vec<S>, streams: Vec<ParticleRng>, seed: u64, deterministic: bool) -> Self {
        let p = states.len();
        Self {
            states,
            log_weights: vec![-(p as f64).ln(); p],
            log_evidence: 0.0,
            streams,
            master: particle_stream(seed, MASTER_STREAM),
            reduction: Reduction::from_flag(deterministic),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[S] {
        &self.states
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    pub fn normalized_weights(&self) -> Vec<f64> {
        self.log_weights.iter().map(|w| w.exp()).collect()
    }

    pub fn log_evidence(&self) -> f64 {
        self.log_evidence
    }

    pub fn reduction(&self) -> Reduction {
        self.reduction
    }

    pub fn ess(&self) -> Result<f64> {
        ess_with(&self.log_weights, self.reduction)
    }

    pub fn into_states(self) -> Vec<S> {
        self.states
    }

    /// Stream reserved for cloud-level randomness (resampling).
    pub fn master_rng(&mut self) -> &mut ParticleRng {
        &mut self.master
    }

    /// Multiply each weight by `exp(incremental[p])`, renormalise, and add
    /// `log Σ_p w_p exp(ω_p)` to the evidence. Returns that increment.
    ///
    /// NaN increments are treated as `-inf`. If every particle ends with zero
    /// weight the cloud is left untouched and an error is returned.
    pub fn normalize_and_accumulate(&mut self, incremental: &[f64]) -> Result<f64> {
        if incremental.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} increments for {} particles",
                incremental.len(),
                self.len()
            )));
        }
        let updated: Vec<f64> = self
            .log_weights
            .iter()
            .zip(incremental)
            .map(|(&w, &om)| {
                if w == f64::NEG_INFINITY || om.is_nan() {
                    f64::NEG_INFINITY
                } else {
                    w + om
                }
            })
            .collect();
        let increment = self.reduction.log_sum_exp(&updated);
        if !increment.is_finite() {
            return Err(Error::DegenerateCloud(format!(
                "incremental weights give log-normaliser {increment}"
            )));
        }
        self.log_weights = updated.into_iter().map(|w| w - increment).collect();
        self.log_evidence += increment;
        Ok(increment)
    }

    /// Replace the cloud by a stratified resample and reset to equal weights.
    /// Returns the ancestor indices.
    pub fn resample(&mut self) -> Result<Vec<usize>>
    where
        S: Clone,
    {
        let weights = self.normalized_weights();
        let ancestors = stratified_resample(&weights, &mut self.master)?;
        self.states = ancestors.iter().map(|&a| self.states[a].clone()).collect();
        let p = self.len() as f64;
        self.log_weights.iter_mut().for_each(|w| *w = -p.ln());
        Ok(ancestors)
    }

    /// Apply `f` to every particle with its own stream, in parallel.
    pub fn for_each_particle<F>(&mut self, f: F)
    where
        S: Send,
        F: Fn(usize, &mut S, &mut ParticleRng) + Sync + Send,
    {
        self.states
            .par_iter_mut()
            .zip(self.streams.par_iter_mut())
            .enumerate()
            .for_each(|(p, (s, rng))| f(p, s, rng));
    }

    /// Evaluate `f` on every state, in parallel, preserving order.
    pub fn map_states<T, F>(&self, f: F) -> Vec<T>
    where
        S: Sync,
        T: Send,
        F: Fn(&S) -> T + Sync + Send,
    {
        self.states.par_iter().map(f).collect()
    }

    /// Replace the states (e.g. after a transformation into a new space),
    /// keeping weights, evidence and streams.
    pub fn map_into<T, F>(self, f: F) -> ParticleCloud<T>
    where
        S: Send,
        T: Send,
        F: Fn(S, &mut ParticleRng) -> T + Sync + Send,
    {
        let Self {
            states,
            log_weights,
            log_evidence,
            mut streams,
            master,
            reduction,
        } = self;
        let states = states
            .into_par_iter()
            .zip(streams.par_iter_mut())
            .map(|(s, rng)| f(s, rng))
            .collect();
        ParticleCloud {
            states,
            log_weights,
            log_evidence,
            streams,
            master,
            reduction,
        }
    }

    /// Overwrite the log-weights. They are renormalised; the evidence is
    /// not touched.
    pub fn set_log_weights(&mut self, log_weights: Vec<f64>) -> Result<()> {
        if log_weights.len() != self.len() {
            return Err(Error::DimensionMismatch("log-weight vector length".into()));
        }
        let total = self.reduction.log_sum_exp(&log_weights);
        if !total.is_finite() {
            return Err(Error::DegenerateCloud("all weights are zero".into()));
        }
        self.log_weights = log_weights.into_iter().map(|w| w - total).collect();
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn constant_increment_adds_its_log() {
        let mut cloud = ParticleCloud::from_states(vec![0.0; 5], 1, true).unwrap();
        let inc = cloud.normalize_and_accumulate(&[3f64.ln(); 5]).unwrap();
        assert!((inc - 3f64.ln()).abs() < 1e-14);
        assert!((cloud.log_evidence() - 3f64.ln()).abs() < 1e-14);
        assert!((cloud.ess().unwrap() - 5.0).abs() < 1e-12);
    }

    #[test]
    fn increment_is_weighted_average() {
        let mut cloud = ParticleCloud::from_states(vec![(); 2], 1, false).unwrap();
        let inc = cloud
            .normalize_and_accumulate(&[2f64.ln(), 4f64.ln()])
            .unwrap();
        assert!((inc - 3f64.ln()).abs() < 1e-14);
        let w = cloud.normalized_weights();
        assert!((w[0] - 1.0 / 3.0).abs() < 1e-14 && (w[1] - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn zero_measure_is_an_error_and_leaves_cloud_intact() {
        let mut cloud = ParticleCloud::from_states(vec![(); 3], 1, false).unwrap();
        let before = cloud.log_weights().to_vec();
        assert!(matches!(
            cloud.normalize_and_accumulate(&[f64::NEG_INFINITY; 3]),
            Err(Error::DegenerateCloud(_))
        ));
        assert_eq!(before, cloud.log_weights());
        assert_eq!(cloud.log_evidence(), 0.0);
    }

    #[test]
    fn streams_are_independent_of_scheduling() {
        let a = ParticleCloud::from_fn(8, 42, true, |rng| rng.random::<u64>()).unwrap();
        let b = ParticleCloud::from_fn(8, 42, true, |rng| rng.random::<u64>()).unwrap();
        assert_eq!(a.states(), b.states());
        let mut c = a.clone();
        c.for_each_particle(|_, s, rng| *s = rng.random());
        let mut d = b.clone();
        d.for_each_particle(|_, s, rng| *s = rng.random());
        assert_eq!(c.states(), d.states());
        // slot streams are distinct
        let mut distinct = c.states().to_vec();
        distinct.sort();
        distinct.dedup();
        assert_eq!(distinct.len(), 8);
    }
}
