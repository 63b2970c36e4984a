use std::f64::consts::PI;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_truncated_normal_pdf, sample_truncated_normal};

/// Proposal for the height at which a new leaf joins its lineage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HeightKind {
    /// Gaussian approximation in the arcsine-root space of the pairwise
    /// difference proportion.
    Laplace,
    /// `Exp(1)` regardless of the data.
    Exp1,
}

impl FromStr for HeightKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "laplace" => Ok(Self::Laplace),
            "exp1" => Ok(Self::Exp1),
            other => Err(format!("unknown height proposal `{other}`")),
        }
    }
}

impl std::fmt::Display for HeightKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Laplace => "laplace",
            Self::Exp1 => "exp1",
        })
    }
}

/// How new leaves are placed and how often trees are rearranged.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalConfig {
    /// Exponent applied to the lineage probabilities; 0 is uniform.
    pub lineage_power: f64,
    pub height_kind: HeightKind,
    pub spr_moves_per_sweep: usize,
}

impl Default for ProposalConfig {
    fn default() -> Self {
        Self {
            lineage_power: 1.0,
            height_kind: HeightKind::Laplace,
            spr_moves_per_sweep: 20,
        }
    }
}

impl ProposalConfig {
    pub const ALLOWED_POWERS: [f64; 4] = [0.0, 1.0, 2.0, 4.0];

    pub fn validate(&self) -> Result<()> {
        if !Self::ALLOWED_POWERS.contains(&self.lineage_power) {
            return Err(Error::config("lineage_power", "must be one of 0, 1, 2, 4"));
        }
        Ok(())
    }
}

/// Normalised log-probabilities of joining each existing leaf's lineage.
///
/// Leaf `s` at SNP distance `M_s` from the new sequence gets mass
/// `(Nθ / (t + Nθ))^{power · M_s}`, where `t` is the number of existing
/// leaves and `N` the number of sites.
pub fn lineage_log_probs(distances: &[usize], n_sites: usize, theta: f64, power: f64) -> Vec<f64> {
    let t = distances.len() as f64;
    let nt = n_sites as f64 * theta;
    let log_ratio = nt.ln() - (t + nt).ln();
    let masses: Vec<f64> = distances
        .iter()
        .map(|&m| if power == 0.0 || m == 0 { 0.0 } else { power * m as f64 * log_ratio })
        .collect();
    let total = crate::numeric::log_sum_exp(&masses);
    masses.into_iter().map(|m| m - total).collect()
}

/// Draw an index from normalised log-probabilities.
pub fn sample_index<R: Rng + ?Sized>(log_probs: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, lp) in log_probs.iter().enumerate() {
        acc += lp.exp();
        if u < acc {
            return i;
        }
    }
    log_probs
        .iter()
        .rposition(|lp| *lp > f64::NEG_INFINITY)
        .unwrap_or(log_probs.len() - 1)
}

/// Upper end of the arcsine-root space: `2 asin(√(3/4)) = 2π/3`.
pub const BETA_UPPER: f64 = 2.0 * PI / 3.0;

fn uses_laplace(kind: HeightKind, m: usize, n: usize) -> bool {
    kind == HeightKind::Laplace && (m as f64) < 0.75 * n as f64
}

fn laplace_params(m: usize, n: usize) -> (f64, f64) {
    (2.0 * (m as f64 / n as f64).sqrt().asin(), 1.0 / (n as f64).sqrt())
}

/// Draw a joining height given `m` differences over `n` sites. The Laplace
/// proposal falls back to `Exp(1)` when `m/n ≥ 3/4`.
pub fn sample_height<R: Rng + ?Sized>(m: usize, n: usize, theta: f64, kind: HeightKind, rng: &mut R) -> f64 {
    if !uses_laplace(kind, m, n) {
        return Exp1.sample(rng);
    }
    let (mean, sd) = laplace_params(m, n);
    let beta = sample_truncated_normal(rng, mean, sd, 0.0, BETA_UPPER);
    let s = (0.5 * beta).sin();
    let q = 4.0 / 3.0 * s * s;
    -3.0 / (4.0 * theta) * (-q).ln_1p()
}

/// Log density of [`sample_height`] at `h`.
pub fn height_log_pdf(h: f64, m: usize, n: usize, theta: f64, kind: HeightKind) -> f64 {
    if !(h > 0.0 && h.is_finite()) {
        return f64::NEG_INFINITY;
    }
    if !uses_laplace(kind, m, n) {
        return -h;
    }
    let (mean, sd) = laplace_params(m, n);
    let x = -4.0 * theta * h / 3.0;
    let p = -0.75 * x.exp_m1();
    let beta = 2.0 * p.sqrt().asin();
    let log_jac = theta.ln() + x - 0.5 * p.ln() - 0.5 * (1.0 - p).ln();
    log_truncated_normal_pdf(beta, mean, sd, 0.0, BETA_UPPER) + log_jac
}
