use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of a `k`-component univariate Gaussian mixture.
///
/// Valid states have weights on the open simplex, strictly ascending means
/// and positive precisions. Intermediate values produced by proposals may
/// break these; [`MixtureState::is_valid`] reports it and the target
/// densities return `-inf` for them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureState {
    pub weights: Vec<f64>,
    pub means: Vec<f64>,
    pub precisions: Vec<f64>,
}

/// One component `(ν, μ, τ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub precision: f64,
}

impl MixtureState {
    /// Checked constructor.
    pub fn new(weights: Vec<f64>, means: Vec<f64>, precisions: Vec<f64>) -> Result<Self> {
        let state = Self::new_unchecked(weights, means, precisions);
        state.validate()?;
        Ok(state)
    }

    pub fn new_unchecked(weights: Vec<f64>, means: Vec<f64>, precisions: Vec<f64>) -> Self {
        Self {
            weights,
            means,
            precisions,
        }
    }

    pub fn from_components(components: &[Component]) -> Self {
        Self {
            weights: components.iter().map(|c| c.weight).collect(),
            means: components.iter().map(|c| c.mean).collect(),
            precisions: components.iter().map(|c| c.precision).collect(),
        }
    }

    pub fn k(&self) -> usize {
        self.weights.len()
    }

    pub fn component(&self, i: usize) -> Component {
        Component {
            weight: self.weights[i],
            mean: self.means[i],
            precision: self.precisions[i],
        }
    }

    pub fn components(&self) -> Vec<Component> {
        (0..self.k()).map(|i| self.component(i)).collect()
    }

    pub fn is_ordered(&self) -> bool {
        self.means.windows(2).all(|w| w[0] < w[1])
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.weights.len();
        if k == 0 || self.means.len() != k || self.precisions.len() != k {
            return Err(Error::DimensionMismatch(format!(
                "mixture with {} weights, {} means, {} precisions",
                k,
                self.means.len(),
                self.precisions.len()
            )));
        }
        if self.weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("mixture weights must be positive".into()));
        }
        let total: f64 = self.weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 * k as f64 {
            return Err(Error::InvalidArgument(format!(
                "mixture weights sum to {total}, not 1"
            )));
        }
        if self.precisions.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(Error::InvalidArgument("precisions must be positive".into()));
        }
        if self.means.iter().any(|m| !m.is_finite()) || !self.is_ordered() {
            return Err(Error::InvalidArgument("means must be strictly ascending".into()));
        }
        Ok(())
    }

    /// Position at which a component with mean `mean` enters the ordering;
    /// ties go after existing equal means.
    pub fn insertion_position(&self, mean: f64) -> usize {
        self.means.partition_point(|m| *m <= mean)
    }

    pub fn insert(&mut self, position: usize, c: Component) {
        self.weights.insert(position, c.weight);
        self.means.insert(position, c.mean);
        self.precisions.insert(position, c.precision);
    }

    pub fn remove(&mut self, position: usize) -> Component {
        Component {
            weight: self.weights.remove(position),
            mean: self.means.remove(position),
            precision: self.precisions.remove(position),
        }
    }

    /// Reorder components by ascending mean (stable).
    pub fn sort_by_mean(&mut self) {
        let mut comps = self.components();
        comps.sort_by(|a, b| a.mean.total_cmp(&b.mean));
        *self = Self::from_components(&comps);
    }
}

/// Univariate observations together with the summaries that set the prior.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GmmData {
    pub observations: Vec<f64>,
    /// Mean of the observations, `m`.
    pub data_mean: f64,
    /// Range of the observations, `S`.
    pub data_range: f64,
}

impl GmmData {
    /// Computes `m` and `S` from the observations.
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::InvalidArgument("no observations".into()));
        }
        if observations.iter().any(|y| !y.is_finite()) {
            return Err(Error::InvalidArgument("observations must be finite".into()));
        }
        let n = observations.len() as f64;
        let mean = observations.iter().sum::<f64>() / n;
        let (lo, hi) = observations
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), y| {
                (lo.min(*y), hi.max(*y))
            });
        Self::with_hyperparameters(observations, mean, hi - lo)
    }

    /// Explicit `m` and `S`; allows an empty data set (prior-only target).
    pub fn with_hyperparameters(observations: Vec<f64>, data_mean: f64, data_range: f64) -> Result<Self> {
        if !(data_range > 0.0 && data_range.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "data range must be positive, got {data_range}"
            )));
        }
        Ok(Self {
            observations,
            data_mean,
            data_range,
        })
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Hyperparameters: `μ ~ N(m, S²)`, `τ ~ Gamma(2, rate 2S²/100)`.
    pub fn prior(&self) -> MixturePrior {
        let s2 = self.data_range * self.data_range;
        MixturePrior {
            mean_location: self.data_mean,
            mean_variance: s2,
            precision_shape: 2.0,
            precision_rate: 2.0 * s2 / 100.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixturePrior {
    pub mean_location: f64,
    pub mean_variance: f64,
    pub precision_shape: f64,
    pub precision_rate: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn data_summaries() {
        let d = GmmData::new(vec![1.0, 2.0, 4.0]).unwrap();
        assert_eq!(d.len(), 3);
        assert!((d.data_mean - 7.0 / 3.0).abs() < 1e-15);
        assert_eq!(d.data_range, 3.0);
        assert!(GmmData::new(vec![]).is_err());
        assert!(GmmData::new(vec![2.0, 2.0]).is_err());
    }

    #[test]
    fn validation() {
        assert!(MixtureState::new(vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, 1.0]).is_ok());
        assert!(MixtureState::new(vec![0.5, 0.5], vec![1.0, 0.0], vec![1.0, 1.0]).is_err());
        assert!(MixtureState::new(vec![0.6, 0.5], vec![0.0, 1.0], vec![1.0, 1.0]).is_err());
        assert!(MixtureState::new(vec![0.5, 0.5], vec![0.0, 1.0], vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn insertion_position_keeps_order() {
        let s = MixtureState::new(vec![0.3, 0.3, 0.4], vec![-1.0, 0.0, 2.0], vec![1.0; 3]).unwrap();
        assert_eq!(s.insertion_position(-5.0), 0);
        assert_eq!(s.insertion_position(1.0), 2);
        assert_eq!(s.insertion_position(9.0), 3);
        assert_eq!(s.insertion_position(0.0), 2);
    }
}
