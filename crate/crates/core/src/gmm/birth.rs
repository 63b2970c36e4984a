//! Birth transformation: a fresh component drawn from (roughly) the prior is
//! added, existing weights are shrunk by `1 − w*`, and the result is
//! reordered by mean.

use rand::Rng;
use rand_distr::{Beta, Distribution, Gamma, Normal};

use super::density::log_posterior_unnorm;
use super::mixture::{Component, GmmData, MixtureState};
use super::WeightMode;
use crate::numeric::{log_beta_pdf, log_gamma_pdf, log_normal_pdf, log_sum_exp};

/// The new component `(w*, μ*, τ*)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirthAux {
    pub weight: f64,
    pub mean: f64,
    pub precision: f64,
}

/// Draw `w* ~ Beta(1, k)`, `μ* ~ p_μ`, `τ* ~ p_τ` for a `k`-component source.
pub fn sample_birth_aux<R: Rng + ?Sized>(k: usize, data: &GmmData, rng: &mut R) -> BirthAux {
    let prior = data.prior();
    let weight = Beta::new(1.0, k as f64).expect("valid beta").sample(rng);
    let mean = Normal::new(prior.mean_location, prior.mean_variance.sqrt())
        .expect("valid normal")
        .sample(rng);
    let precision = Gamma::new(prior.precision_shape, 1.0 / prior.precision_rate)
        .expect("valid gamma")
        .sample(rng);
    BirthAux {
        weight,
        mean,
        precision,
    }
}

/// Log density of the birth proposal for a `k`-component source.
pub fn birth_log_proposal(aux: &BirthAux, k: usize, data: &GmmData) -> f64 {
    let prior = data.prior();
    log_beta_pdf(aux.weight, 1.0, k as f64)
        + log_normal_pdf(aux.mean, prior.mean_location, prior.mean_variance)
        + log_gamma_pdf(aux.precision, prior.precision_shape, prior.precision_rate)
}

/// `log |∂θ'/∂(θ, u)|` of the birth map on a `k`-component source: only the
/// weight rescaling contributes, `(1 − w*)^{k−1}`.
pub fn birth_log_jacobian(k: usize, new_weight: f64) -> f64 {
    (k as f64 - 1.0) * (1.0 - new_weight).ln()
}

/// Add the component `aux`, returning the new state and the 0-based position
/// at which the new component landed.
pub fn birth_transform(state: &MixtureState, aux: &BirthAux) -> (MixtureState, usize) {
    let mut out = state.clone();
    out.weights.iter_mut().for_each(|w| *w *= 1.0 - aux.weight);
    let position = out.insertion_position(aux.mean);
    out.insert(
        position,
        Component {
            weight: aux.weight,
            mean: aux.mean,
            precision: aux.precision,
        },
    );
    (out, position)
}

/// Inverse of [`birth_transform`]: drop the component at `position` and
/// rescale the remaining weights.
pub fn remove_component(state: &MixtureState, position: usize) -> (MixtureState, BirthAux) {
    let mut out = state.clone();
    let c = out.remove(position);
    out.weights.iter_mut().for_each(|w| *w /= 1.0 - c.weight);
    (
        out,
        BirthAux {
            weight: c.weight,
            mean: c.mean,
            precision: c.precision,
        },
    )
}

/// `log φ_t(G⁻¹(θ'))` for one inverse label: source posterior times proposal
/// divided by the forward Jacobian.
fn removal_term(target: &MixtureState, position: usize, data: &GmmData) -> f64 {
    let k = target.k() - 1;
    let (source, aux) = remove_component(target, position);
    let lp = log_posterior_unnorm(&source, data);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + birth_log_proposal(&aux, k, data) - birth_log_jacobian(k, aux.weight)
}

/// Log density of birth-transformed particles at `target` (a `k+1`
/// component state).
///
/// Conditional mode keeps the label of the new component and includes the
/// uniform `1/(k+1)` label distribution in the target; marginal mode sums the
/// proposal over every component that could have been the new one.
pub fn birth_log_pushforward(
    target: &MixtureState,
    label: Option<usize>,
    mode: WeightMode,
    data: &GmmData,
) -> f64 {
    let k1 = target.k();
    match mode {
        WeightMode::Conditional => {
            let position = label.expect("conditional birth needs the insertion label");
            removal_term(target, position, data) + (k1 as f64).ln()
        }
        WeightMode::Marginal => {
            let terms: Vec<f64> = (0..k1).map(|l| removal_term(target, l, data)).collect();
            log_sum_exp(&terms)
        }
    }
}

/// Incremental log-weight of a birth move from `state` with auxiliaries
/// `aux`, where `new_state` is the first output of `birth_transform(state, aux)`.
pub fn birth_weight(
    state: &MixtureState,
    aux: &BirthAux,
    new_state: &MixtureState,
    mode: WeightMode,
    data: &GmmData,
) -> f64 {
    let to = log_posterior_unnorm(new_state, data);
    if to == f64::NEG_INFINITY {
        return to;
    }
    let from = match mode {
        WeightMode::Conditional => {
            let k = state.k();
            log_posterior_unnorm(state, data) + birth_log_proposal(aux, k, data)
                - birth_log_jacobian(k, aux.weight)
                + ((k + 1) as f64).ln()
        }
        WeightMode::Marginal => birth_log_pushforward(new_state, None, mode, data),
    };
    to - from
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s2() -> MixtureState {
        MixtureState::new(vec![0.4, 0.6], vec![-1.0, 2.0], vec![1.0, 0.5]).unwrap()
    }

    #[test]
    fn append_case() {
        let s = MixtureState::new(vec![1.0], vec![0.0], vec![1.0]).unwrap();
        let aux = BirthAux {
            weight: 0.3,
            mean: 1.5,
            precision: 2.0,
        };
        let (t, pos) = birth_transform(&s, &aux);
        assert_eq!(pos, 1);
        assert!((t.weights[0] - 0.7).abs() < 1e-15 && t.weights[1] == 0.3);
        assert!(t.is_valid());
    }

    #[test]
    fn remove_inverts_birth() {
        let s = s2();
        let aux = BirthAux {
            weight: 0.25,
            mean: 0.3,
            precision: 3.0,
        };
        let (t, pos) = birth_transform(&s, &aux);
        assert_eq!(pos, 1);
        let (back, aux_back) = remove_component(&t, pos);
        for (a, b) in back.weights.iter().zip(&s.weights) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(back.means, s.means);
        assert_eq!(aux_back, aux);
    }

    #[test]
    fn marginal_sum_enumerates_removals() {
        let s = MixtureState::new(vec![1.0], vec![0.2], vec![1.5]).unwrap();
        let data = GmmData::with_hyperparameters(vec![0.1, 0.4, -0.3], 0.0, 2.0).unwrap();
        let aux = BirthAux {
            weight: 0.4,
            mean: 1.1,
            precision: 0.7,
        };
        let (t, _) = birth_transform(&s, &aux);
        let manual: f64 = (0..2)
            .map(|l| {
                let (src, a) = remove_component(&t, l);
                (log_posterior_unnorm(&src, &data) + birth_log_proposal(&a, 1, &data)).exp()
            })
            .sum();
        let got = birth_log_pushforward(&t, None, WeightMode::Marginal, &data);
        assert!((got - manual.ln()).abs() < 1e-10);
    }
}
