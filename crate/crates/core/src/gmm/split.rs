//! Moment-matched split of one component into two (Richardson–Green
//! parameterisation), followed by reordering of all components by mean.

use rand::Rng;
use rand_distr::{Beta, Distribution};

use super::density::log_posterior_unnorm;
use super::mixture::{Component, GmmData, MixtureState};
use super::WeightMode;
use crate::numeric::{ln_binomial, log_beta_pdf, log_sum_exp};

/// Auxiliary variables of a split: `u1, u2, u3 ∈ (0,1)` and the 0-based
/// index of the component being split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitAux {
    pub u1: f64,
    pub u2: f64,
    pub u3: f64,
    pub component: usize,
}

impl SplitAux {
    pub fn is_valid(&self) -> bool {
        [self.u1, self.u2, self.u3].iter().all(|u| *u > 0.0 && *u < 1.0)
    }
}

/// `u1, u2 ~ Beta(2,2)`, `u3 ~ Beta(1,1)`, component uniform on `0..k`.
pub fn sample_split_aux<R: Rng + ?Sized>(k: usize, rng: &mut R) -> SplitAux {
    let b22 = Beta::new(2.0, 2.0).expect("valid beta");
    SplitAux {
        u1: b22.sample(rng),
        u2: b22.sample(rng),
        u3: rng.random::<f64>(),
        component: rng.random_range(0..k),
    }
}

/// `log ψ(u)` of the continuous split auxiliaries (component choice excluded).
pub fn split_log_proposal(aux: &SplitAux) -> f64 {
    log_beta_pdf(aux.u1, 2.0, 2.0) + log_beta_pdf(aux.u2, 2.0, 2.0) + log_beta_pdf(aux.u3, 1.0, 1.0)
}

/// Split `c` into `(lower, upper)` with `lower.mean < upper.mean`, preserving
/// total weight and the first two moments.
pub fn split_component(c: &Component, u1: f64, u2: f64, u3: f64) -> (Component, Component) {
    let var = 1.0 / c.precision;
    let sd = var.sqrt();
    let w1 = c.weight * u1;
    let w2 = c.weight * (1.0 - u1);
    let m1 = c.mean - u2 * sd * (w2 / w1).sqrt();
    let m2 = c.mean + u2 * sd * (w1 / w2).sqrt();
    let v1 = u3 * (1.0 - u2 * u2) * var * c.weight / w1;
    let v2 = (1.0 - u3) * (1.0 - u2 * u2) * var * c.weight / w2;
    (
        Component {
            weight: w1,
            mean: m1,
            precision: 1.0 / v1,
        },
        Component {
            weight: w2,
            mean: m2,
            precision: 1.0 / v2,
        },
    )
}

/// Moment-matching merge; inverse of [`split_component`]. Returns the merged
/// component and `(u1, u2, u3)`.
pub fn merge_components(lower: &Component, upper: &Component) -> (Component, [f64; 3]) {
    let (w1, w2) = (lower.weight, upper.weight);
    let w = w1 + w2;
    let mean = (w1 * lower.mean + w2 * upper.mean) / w;
    let (v1, v2) = (1.0 / lower.precision, 1.0 / upper.precision);
    let second = (w1 * (lower.mean * lower.mean + v1) + w2 * (upper.mean * upper.mean + v2)) / w;
    let var = second - mean * mean;
    let u1 = w1 / w;
    let u2 = (upper.mean - mean) / (var.sqrt() * (w1 / w2).sqrt());
    let u3 = v1 * w1 / ((1.0 - u2 * u2) * var * w);
    (
        Component {
            weight: w,
            mean,
            precision: 1.0 / var,
        },
        [u1, u2, u3],
    )
}

/// `log |∂(w1,μ1,τ1,w2,μ2,τ2)/∂(w,μ,τ,u1,u2,u3)|`.
pub fn split_log_jacobian(c: &Component, u2: f64, u3: f64, lower: &Component, upper: &Component) -> f64 {
    let var = 1.0 / c.precision;
    c.weight.ln() + (upper.mean - lower.mean).abs().ln() + var.ln() + lower.precision.ln()
        + upper.precision.ln()
        - u2.ln()
        - (1.0 - u2 * u2).ln()
        - u3.ln()
        - (1.0 - u3).ln()
}

/// Split component `aux.component` and reorder. Returns the new state and
/// the 0-based positions `(h, k)`, `h < k`, of the two new components.
///
/// Degenerate splits (e.g. a zero weight from an extreme `u1`) still return
/// a state; it is simply outside the target's support.
pub fn split_transform(state: &MixtureState, aux: &SplitAux) -> (MixtureState, (usize, usize)) {
    let mut out = state.clone();
    let c = out.remove(aux.component);
    let (lower, upper) = split_component(&c, aux.u1, aux.u2, aux.u3);
    let h = out.insertion_position(lower.mean);
    out.insert(h, lower);
    let k = out.insertion_position(upper.mean);
    out.insert(k, upper);
    (out, (h, k))
}

/// Inverse of [`split_transform`] for the pair `(h, k)`. `None` when the
/// merge falls outside the split's domain.
pub fn merge_inverse(state: &MixtureState, pair: (usize, usize)) -> Option<(MixtureState, SplitAux)> {
    let (h, k) = pair;
    if !(h < k && k < state.k()) {
        return None;
    }
    let mut out = state.clone();
    let upper = out.remove(k);
    let lower = out.remove(h);
    let (merged, [u1, u2, u3]) = merge_components(&lower, &upper);
    if !(merged.precision > 0.0 && merged.precision.is_finite()) {
        return None;
    }
    let component = out.insertion_position(merged.mean);
    out.insert(component, merged);
    let aux = SplitAux {
        u1,
        u2,
        u3,
        component,
    };
    if !aux.is_valid() {
        return None;
    }
    Some((out, aux))
}

/// `log φ_k(G⁻¹(θ'))` for one pair: source posterior times `ψ(u)/k` over
/// the forward Jacobian. `-inf` outside the merge domain.
fn merge_term(target: &MixtureState, pair: (usize, usize), data: &GmmData) -> f64 {
    let Some((source, aux)) = merge_inverse(target, pair) else {
        return f64::NEG_INFINITY;
    };
    let lp = log_posterior_unnorm(&source, data);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    let c = source.component(aux.component);
    let (lower, upper) = (target.component(pair.0), target.component(pair.1));
    lp + split_log_proposal(&aux) - (source.k() as f64).ln()
        - split_log_jacobian(&c, aux.u2, aux.u3, &lower, &upper)
}

/// All pairs `(h, k)`, `h < k`, of a `k1`-component state.
pub fn pair_labels(k1: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..k1).flat_map(move |h| (h + 1..k1).map(move |k| (h, k)))
}

/// Log density of split-transformed particles at `target`. Conditional mode
/// keeps the pair label and includes the uniform label distribution over the
/// `C(k+1, 2)` pairs; marginal mode sums over every pair.
pub fn split_log_pushforward(
    target: &MixtureState,
    pair: Option<(usize, usize)>,
    mode: WeightMode,
    data: &GmmData,
) -> f64 {
    let k1 = target.k();
    match mode {
        WeightMode::Conditional => {
            let pair = pair.expect("conditional split needs the pair label");
            merge_term(target, pair, data) + ln_binomial(k1 as u64, 2)
        }
        WeightMode::Marginal => {
            let terms: Vec<f64> = pair_labels(k1).map(|p| merge_term(target, p, data)).collect();
            log_sum_exp(&terms)
        }
    }
}

/// Incremental log-weight of a split of `state` with `aux`, where
/// `(new_state, pair) = split_transform(state, aux)`.
pub fn split_weight(
    state: &MixtureState,
    aux: &SplitAux,
    new_state: &MixtureState,
    pair: (usize, usize),
    mode: WeightMode,
    data: &GmmData,
) -> f64 {
    let to = log_posterior_unnorm(new_state, data);
    if to == f64::NEG_INFINITY {
        return to;
    }
    let from = match mode {
        WeightMode::Conditional => {
            let c = state.component(aux.component);
            let (lower, upper) = (new_state.component(pair.0), new_state.component(pair.1));
            log_posterior_unnorm(state, data) + split_log_proposal(aux) - (state.k() as f64).ln()
                - split_log_jacobian(&c, aux.u2, aux.u3, &lower, &upper)
                + ln_binomial(new_state.k() as u64, 2)
        }
        WeightMode::Marginal => split_log_pushforward(new_state, None, mode, data),
    };
    to - from
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s3() -> MixtureState {
        MixtureState::new(vec![0.2, 0.5, 0.3], vec![-2.0, 0.5, 4.0], vec![1.0, 0.25, 2.0]).unwrap()
    }

    #[test]
    fn moments_preserved() {
        let c = Component {
            weight: 0.6,
            mean: 1.3,
            precision: 0.8,
        };
        let (a, b) = split_component(&c, 0.3, 0.6, 0.45);
        assert!(a.mean < b.mean);
        assert!((a.weight + b.weight - c.weight).abs() < 1e-14);
        assert!((a.weight * a.mean + b.weight * b.mean - c.weight * c.mean).abs() < 1e-14);
        let second = |x: &Component| x.weight * (x.mean * x.mean + 1.0 / x.precision);
        assert!((second(&a) + second(&b) - second(&c)).abs() < 1e-13);
    }

    #[test]
    fn merge_inverts_split() {
        let s = s3();
        for component in 0..3 {
            let aux = SplitAux {
                u1: 0.35,
                u2: 0.7,
                u3: 0.2,
                component,
            };
            let (t, pair) = split_transform(&s, &aux);
            assert!(t.is_ordered());
            let (back, aux_back) = merge_inverse(&t, pair).unwrap();
            assert_eq!(aux_back.component, component);
            for (x, y) in [
                (aux_back.u1, aux.u1),
                (aux_back.u2, aux.u2),
                (aux_back.u3, aux.u3),
            ] {
                assert!((x - y).abs() < 1e-12);
            }
            for i in 0..3 {
                assert!((back.weights[i] - s.weights[i]).abs() < 1e-12);
                assert!((back.means[i] - s.means[i]).abs() < 1e-12);
                assert!((back.precisions[i] - s.precisions[i]).abs() < 1e-12 * s.precisions[i]);
            }
        }
    }

    #[test]
    fn single_pair_modes_coincide() {
        let s = MixtureState::new(vec![1.0], vec![0.3], vec![0.9]).unwrap();
        let data = GmmData::with_hyperparameters(vec![0.1, 0.9, -0.2, 0.4], 0.3, 1.1).unwrap();
        let aux = SplitAux {
            u1: 0.4,
            u2: 0.3,
            u3: 0.6,
            component: 0,
        };
        let (t, pair) = split_transform(&s, &aux);
        let c = split_weight(&s, &aux, &t, pair, WeightMode::Conditional, &data);
        let m = split_weight(&s, &aux, &t, pair, WeightMode::Marginal, &data);
        assert!((c - m).abs() < 1e-10, "{c} vs {m}");
    }

    #[test]
    fn every_pair_merges_inside_domain() {
        let t = MixtureState::new(
            vec![0.1, 0.2, 0.3, 0.4],
            vec![-3.0, -0.1, 0.0, 8.0],
            vec![0.1, 50.0, 0.02, 1.0],
        )
        .unwrap();
        for pair in pair_labels(4) {
            let (src, aux) = merge_inverse(&t, pair).expect("merge defined");
            assert!(aux.is_valid());
            assert!(src.is_ordered());
        }
    }
}
