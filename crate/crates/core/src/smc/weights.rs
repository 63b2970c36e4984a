//! Effective sample size diagnostics in log space.

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp, log_sum_exp_ordered};

/// Reduction used for sums over particles. The ordered variant sorts its
/// terms first so the result does not depend on particle order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reduction {
    IndexOrder,
    Ordered,
}

impl Reduction {
    pub fn from_flag(deterministic: bool) -> Self {
        if deterministic {
            Reduction::Ordered
        } else {
            Reduction::IndexOrder
        }
    }

    pub fn log_sum_exp(self, values: &[f64]) -> f64 {
        match self {
            Reduction::IndexOrder => log_sum_exp(values),
            Reduction::Ordered => log_sum_exp_ordered(values),
        }
    }
}

/// `(Σw)² / Σw²` for (possibly unnormalised) log-weights.
pub fn ess(log_weights: &[f64]) -> Result<f64> {
    ess_with(log_weights, Reduction::IndexOrder)
}

pub fn ess_with(log_weights: &[f64], reduction: Reduction) -> Result<f64> {
    let lse = reduction.log_sum_exp(log_weights);
    if !lse.is_finite() {
        return Err(Error::DegenerateCloud(
            "all log-weights are -inf; ESS undefined".into(),
        ));
    }
    let doubled: Vec<f64> = log_weights.iter().map(|w| 2.0 * w).collect();
    let value = (2.0 * lse - reduction.log_sum_exp(&doubled)).exp();
    Ok(value.clamp(1.0, log_weights.len() as f64))
}

/// Conditional ESS `P (Σ w ω)² / Σ w ω²` from linear normalised weights and
/// incremental log-weights.
pub fn cess(normalized_weights: &[f64], incremental_log_weights: &[f64]) -> Result<f64> {
    if normalized_weights.len() != incremental_log_weights.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights but {} increments",
            normalized_weights.len(),
            incremental_log_weights.len()
        )));
    }
    let log_w: Vec<f64> = normalized_weights.iter().map(|w| w.ln()).collect();
    cess_log(&log_w, incremental_log_weights, Reduction::IndexOrder)
}

/// CESS with normalised log-weights. Terms whose particle weight is zero are
/// dropped, so a `-inf` increment on a dead particle is harmless.
pub fn cess_log(log_weights: &[f64], incremental: &[f64], reduction: Reduction) -> Result<f64> {
    let p = log_weights.len() as f64;
    let mut first = Vec::with_capacity(log_weights.len());
    let mut second = Vec::with_capacity(log_weights.len());
    for (&lw, &om) in log_weights.iter().zip(incremental) {
        if lw == f64::NEG_INFINITY {
            continue;
        }
        let om = if om.is_nan() { f64::NEG_INFINITY } else { om };
        first.push(lw + om);
        second.push(lw + 2.0 * om);
    }
    let a = reduction.log_sum_exp(&first);
    if a == f64::NEG_INFINITY {
        return Err(Error::DegenerateCloud(
            "all incremental weights are zero; CESS undefined".into(),
        ));
    }
    let value = p * (2.0 * a - reduction.log_sum_exp(&second)).exp();
    Ok(value.min(p))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ess_examples() {
        assert!((ess(&[0.3; 4]).unwrap() - 4.0).abs() < 1e-12);
        let single = [0.0, f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert!((ess(&single).unwrap() - 1.0).abs() < 1e-12);
        let w = [0.5f64.ln(), 0.25f64.ln(), 0.25f64.ln()];
        assert!((ess(&w).unwrap() - 1.0 / 0.375).abs() < 1e-12);
    }

    #[test]
    fn ess_rejects_degenerate() {
        assert!(matches!(
            ess(&[f64::NEG_INFINITY; 3]),
            Err(Error::DegenerateCloud(_))
        ));
    }

    #[test]
    fn cess_examples() {
        let w = [0.2, 0.3, 0.5];
        assert!((cess(&w, &[1.7; 3]).unwrap() - 3.0).abs() < 1e-12);
        let v = cess(&[0.5, 0.5], &[1f64.ln(), 3f64.ln()]).unwrap();
        assert!((v - 1.6).abs() < 1e-12);
        let v = cess(&[1.0, 0.0], &[5f64.ln(), 123.0]).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!(cess(&[0.5, 0.5], &[f64::NEG_INFINITY; 2]).is_err());
    }
}
