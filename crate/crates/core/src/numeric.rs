//! Small numerical kernels shared by the samplers: log-space reductions,
//! log densities of the standard families used as priors and proposals, and
//! truncated-normal helpers.

use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::erf::erfc;

pub use statrs::function::beta::ln_beta;
pub use statrs::function::gamma::ln_gamma;

pub const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// `log Σ exp(x_i)` in index order. Returns `-inf` for an empty slice or when
/// every term is `-inf`.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return if max == f64::INFINITY { max } else { f64::NEG_INFINITY };
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `log Σ exp(x_i)` with the terms summed in ascending order, so the result
/// is bit-identical under any permutation of the input.
pub fn log_sum_exp_ordered(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    log_sum_exp(&sorted)
}

pub fn log_normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let d = x - mean;
    -0.5 * (LN_2PI + variance.ln() + d * d / variance)
}

/// Gamma density with the given shape and *rate*.
pub fn log_gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

pub fn log_beta_pdf(x: f64, a: f64, b: f64) -> f64 {
    if !(x > 0.0 && x < 1.0) {
        return f64::NEG_INFINITY;
    }
    (a - 1.0) * x.ln() + (b - 1.0) * (1.0 - x).ln() - ln_beta(a, b)
}

/// Standard normal CDF.
pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `log(Φ(b) − Φ(a))` for standardised bounds `a < b`, evaluated on the
/// side of the distribution that avoids cancellation.
pub fn log_std_normal_mass(a: f64, b: f64) -> f64 {
    if a >= b {
        return f64::NEG_INFINITY;
    }
    let mass = if a > 0.0 {
        std_normal_cdf(-a) - std_normal_cdf(-b)
    } else {
        std_normal_cdf(b) - std_normal_cdf(a)
    };
    mass.ln()
}

fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

/// Draw from `N(mean, sd²)` restricted to `(lower, upper)` by inversion.
/// Either bound may be infinite.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    sd: f64,
    lower: f64,
    upper: f64,
) -> f64 {
    let a = (lower - mean) / sd;
    let b = (upper - mean) / sd;
    let u: f64 = rng.random();
    // Work in the tail that keeps the CDF values away from 1.
    let z = if a > 0.0 {
        let pa = std_normal_cdf(-a);
        let pb = std_normal_cdf(-b);
        -std_normal_quantile(pb + u * (pa - pb))
    } else {
        let pa = std_normal_cdf(a);
        let pb = std_normal_cdf(b);
        std_normal_quantile(pa + u * (pb - pa))
    };
    (mean + sd * z).clamp(lower, upper)
}

/// Log density of the truncated normal at `x` (normaliser included).
pub fn log_truncated_normal_pdf(x: f64, mean: f64, sd: f64, lower: f64, upper: f64) -> f64 {
    if !(x > lower && x < upper) {
        return f64::NEG_INFINITY;
    }
    log_normal_pdf(x, mean, sd * sd) - log_std_normal_mass((lower - mean) / sd, (upper - mean) / sd)
}

/// Weighted mean and (biased, weights normalised) variance.
pub fn weighted_mean_var(values: &[f64], weights: &[f64]) -> (f64, f64) {
    let total: f64 = weights.iter().sum();
    let mean = values.iter().zip(weights).map(|(v, w)| v * w).sum::<f64>() / total;
    let var = values
        .iter()
        .zip(weights)
        .map(|(v, w)| w * (v - mean).powi(2))
        .sum::<f64>()
        / total;
    (mean, var)
}

pub fn ln_binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return f64::NEG_INFINITY;
    }
    ln_gamma(n as f64 + 1.0) - ln_gamma(k as f64 + 1.0) - ln_gamma((n - k) as f64 + 1.0)
}

pub fn ln_factorial(n: u64) -> f64 {
    ln_gamma(n as f64 + 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn log_sum_exp_handles_extremes() {
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY; 3]), f64::NEG_INFINITY);
        let v = log_sum_exp(&[1000.0, 1000.0]);
        assert!((v - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert!((log_sum_exp(&[2f64.ln(), 4f64.ln()]) - 6f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn ordered_lse_is_permutation_invariant() {
        let a = [0.1, -3.7, 12.25, 1e-9, 4.0, -0.5];
        let mut b = a;
        b.reverse();
        b.swap(1, 4);
        assert_eq!(log_sum_exp_ordered(&a).to_bits(), log_sum_exp_ordered(&b).to_bits());
    }

    #[test]
    fn densities_match_closed_forms() {
        assert!((log_normal_pdf(0.0, 0.0, 1.0) + 0.918_938_533_204_672_8).abs() < 1e-12);
        // Exp(5) is Gamma(1, rate 5)
        assert!((log_gamma_pdf(0.3, 1.0, 5.0) - (5f64.ln() - 1.5)).abs() < 1e-12);
        // Beta(2,2) at 0.5 = 1.5
        assert!((log_beta_pdf(0.5, 2.0, 2.0) - 1.5f64.ln()).abs() < 1e-12);
        assert_eq!(log_beta_pdf(1.0, 2.0, 2.0), f64::NEG_INFINITY);
    }

    #[test]
    fn truncated_normal_respects_bounds_and_mass() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let x = sample_truncated_normal(&mut rng, 0.0, 1.0, 2.0, 2.5);
            assert!((2.0..=2.5).contains(&x));
            let y = sample_truncated_normal(&mut rng, 1.0, 0.1, 0.0, f64::INFINITY);
            assert!(y >= 0.0);
        }
        // Far upper tail mass is computed without cancellation.
        let lm = log_std_normal_mass(10.0, f64::INFINITY);
        assert!(lm.is_finite() && lm < -50.0);
        // density integrates to one (midpoint rule)
        let n = 20_000;
        let (lo, hi) = (-0.3, 1.7);
        let h = (hi - lo) / n as f64;
        let mass: f64 = (0..n)
            .map(|i| log_truncated_normal_pdf(lo + (i as f64 + 0.5) * h, 0.4, 0.7, lo, hi).exp() * h)
            .sum();
        assert!((mass - 1.0).abs() < 1e-6);
    }
}
