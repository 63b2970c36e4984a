use rand::Rng;
use rand_distr::{Distribution, Exp1, Gamma, Normal};

use super::mixture::{GmmData, MixtureState};
use crate::numeric::{ln_factorial, ln_gamma, log_gamma_pdf, log_normal_pdf, LN_2PI};

/// `Σ_i log Σ_s ν_s N(y_i | μ_s, 1/τ_s)`.
pub fn log_likelihood(state: &MixtureState, data: &GmmData) -> f64 {
    let k = state.k();
    // per-component log(ν_s) + ½ log(τ_s / 2π)
    let offsets: Vec<f64> = (0..k)
        .map(|s| state.weights[s].ln() + 0.5 * (state.precisions[s].ln() - LN_2PI))
        .collect();
    let mut terms = vec![0.0; k];
    let mut total = 0.0;
    for &y in &data.observations {
        let mut max = f64::NEG_INFINITY;
        for s in 0..k {
            let d = y - state.means[s];
            terms[s] = offsets[s] - 0.5 * state.precisions[s] * d * d;
            max = max.max(terms[s]);
        }
        if max == f64::NEG_INFINITY || max.is_nan() {
            return f64::NEG_INFINITY;
        }
        let sum: f64 = terms.iter().map(|t| (t - max).exp()).sum();
        total += max + sum.ln();
    }
    total
}

/// Prior density of an ordered mixture: `Dir(1,…,1)` on the weights, iid
/// `N(m, S²)` means and `Gamma(2, 2S²/100)` precisions, restricted to
/// ascending means and multiplied by `k!` so it integrates to one over the
/// ordered region. `-inf` outside the support.
pub fn log_prior(state: &MixtureState, data: &GmmData) -> f64 {
    if !support_ok(state) {
        return f64::NEG_INFINITY;
    }
    let k = state.k();
    let prior = data.prior();
    let mut lp = ln_gamma(k as f64) + ln_factorial(k as u64);
    for s in 0..k {
        lp += log_normal_pdf(state.means[s], prior.mean_location, prior.mean_variance);
        lp += log_gamma_pdf(state.precisions[s], prior.precision_shape, prior.precision_rate);
    }
    lp
}

/// Unnormalised posterior of the `k`-component model; its normalising
/// constant is the marginal likelihood of the unconstrained mixture.
pub fn log_posterior_unnorm(state: &MixtureState, data: &GmmData) -> f64 {
    let lp = log_prior(state, data);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + log_likelihood(state, data)
}

fn support_ok(state: &MixtureState) -> bool {
    let k = state.k();
    if k == 0 || state.means.len() != k || state.precisions.len() != k {
        return false;
    }
    state.weights.iter().all(|w| *w > 0.0 && w.is_finite())
        && state.precisions.iter().all(|t| *t > 0.0 && t.is_finite())
        && state.means.iter().all(|m| m.is_finite())
        && state.is_ordered()
}

/// Draw from the ordered prior: iid components sorted by mean.
pub fn sample_prior<R: Rng + ?Sized>(k: usize, data: &GmmData, rng: &mut R) -> MixtureState {
    let prior = data.prior();
    let mean_dist = Normal::new(prior.mean_location, prior.mean_variance.sqrt()).expect("valid normal");
    let prec_dist =
        Gamma::new(prior.precision_shape, 1.0 / prior.precision_rate).expect("valid gamma");
    let raw: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let total: f64 = raw.iter().sum();
    let mut state = MixtureState::new_unchecked(
        raw.iter().map(|e| e / total).collect(),
        (0..k).map(|_| mean_dist.sample(rng)).collect(),
        (0..k).map(|_| prec_dist.sample(rng)).collect(),
    );
    state.sort_by_mean();
    state
}
