use rand::Rng;

use crate::error::{Error, Result};

/// Stratified resampling: one uniform per stratum `((p-1)/P, p/P)`, mapped
/// through the inverse CDF of the weights. Returns `P` ancestor indices in
/// non-decreasing order.
pub fn stratified_resample<R: Rng + ?Sized>(
    normalized_weights: &[f64],
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = normalized_weights.len();
    if n == 0 {
        return Err(Error::InvalidArgument("cannot resample an empty cloud".into()));
    }
    if let Some(w) = normalized_weights.iter().find(|w| !(**w >= 0.0)) {
        return Err(Error::InvalidArgument(format!(
            "negative or NaN weight {w} in resampling"
        )));
    }
    let total: f64 = normalized_weights.iter().sum();
    if !(total > 0.0) {
        return Err(Error::DegenerateCloud("resampling weights sum to zero".into()));
    }
    let draws: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
    Ok(stratified_from_uniforms(normalized_weights, &draws))
}

/// Deterministic core of [`stratified_resample`]; `uniforms[p]` in `[0, 1)`
/// is the position within stratum `p`.
pub fn stratified_from_uniforms(normalized_weights: &[f64], uniforms: &[f64]) -> Vec<usize> {
    let n = normalized_weights.len();
    let total: f64 = normalized_weights.iter().sum();
    let mut out = Vec::with_capacity(uniforms.len());
    let mut cumulative = normalized_weights[0] / total;
    let mut i = 0;
    for (p, u) in uniforms.iter().enumerate() {
        let target = (p as f64 + u) / uniforms.len() as f64;
        while cumulative <= target && i + 1 < n {
            i += 1;
            cumulative += normalized_weights[i] / total;
        }
        // zero-weight atoms are never selected, even at the rounding edge
        while normalized_weights[i] == 0.0 && i > 0 {
            i -= 1;
        }
        out.push(i);
    }
    out
}
