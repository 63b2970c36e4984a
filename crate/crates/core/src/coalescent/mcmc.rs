//! Metropolis–Hastings moves on `(tree, θ)`: a log-scale random walk on θ,
//! truncated-normal height moves and constant-height subtree prune and
//! regraft.

use std::sync::atomic::{AtomicUsize, Ordering};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::bridge::CoalState;
use crate::numeric::{log_truncated_normal_pdf, sample_truncated_normal, weighted_mean_var};
use crate::smc::{MoveKernel, MoveReport, ParticleCloud, ParticleRng, TargetDensity};

/// Proposal standard deviations: θ on the log scale, heights by rank
/// (index 0 is the lowest coalescence).
#[derive(Debug, Clone, PartialEq)]
pub struct MoveScales {
    pub theta_sd: f64,
    pub height_sd: Vec<f64>,
}

/// Proposed and accepted counts by move type.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceCounts {
    pub theta: (usize, usize),
    pub height: Vec<(usize, usize)>,
    pub spr: (usize, usize),
}

fn rate((proposed, accepted): (usize, usize)) -> f64 {
    if proposed == 0 {
        f64::NAN
    } else {
        accepted as f64 / proposed as f64
    }
}

impl AcceptanceCounts {
    pub fn theta_rate(&self) -> f64 {
        rate(self.theta)
    }

    pub fn height_rate(&self) -> f64 {
        rate(self.height.iter().fold((0, 0), |a, b| (a.0 + b.0, a.1 + b.1)))
    }

    pub fn spr_rate(&self) -> f64 {
        rate(self.spr)
    }

    pub fn add(&mut self, other: &AcceptanceCounts) {
        self.theta.0 += other.theta.0;
        self.theta.1 += other.theta.1;
        self.spr.0 += other.spr.0;
        self.spr.1 += other.spr.1;
        if self.height.len() < other.height.len() {
            self.height.resize(other.height.len(), (0, 0));
        }
        for (a, b) in self.height.iter_mut().zip(&other.height) {
            a.0 += b.0;
            a.1 += b.1;
        }
    }
}

/// Double a scale multiplier when acceptance exceeds 0.6, halve it below
/// 0.15, otherwise leave it.
pub fn adapt_multiplier(multiplier: f64, acceptance: f64) -> f64 {
    if acceptance > 0.6 {
        multiplier * 2.0
    } else if acceptance < 0.15 {
        multiplier / 2.0
    } else {
        multiplier
    }
}

const VARIANCE_FLOOR: f64 = 1e-12;

/// Proposal scales from the weighted cloud: `s_θ · Var(log θ)` and, per
/// rank, `s_a · Var(residual of h^(a) regressed on θ)`. Variances are
/// floored at 1e-12.
pub fn adapt_scales(cloud: &ParticleCloud<CoalState>, theta_multiplier: f64, height_multipliers: &[f64]) -> MoveScales {
    let w = cloud.normalized_weights();
    let theta: Vec<f64> = cloud.states().iter().map(|s| s.theta).collect();
    let log_theta: Vec<f64> = theta.iter().map(|t| t.ln()).collect();
    let (_, var_log_theta) = weighted_mean_var(&log_theta, &w);
    let (theta_mean, theta_var) = weighted_mean_var(&theta, &w);
    let heights: Vec<Vec<f64>> = cloud.map_states(|s| s.tree.internal_heights_ascending());
    let ranks = heights[0].len();
    let height_sd = (0..ranks)
        .map(|r| {
            let h: Vec<f64> = heights.iter().map(|v| v[r]).collect();
            let (h_mean, h_var) = weighted_mean_var(&h, &w);
            let cov: f64 = w
                .iter()
                .zip(&theta)
                .zip(&h)
                .map(|((wi, t), hi)| wi * (t - theta_mean) * (hi - h_mean))
                .sum();
            let resid = if theta_var > 0.0 {
                h_var - cov * cov / theta_var
            } else {
                h_var
            };
            let m = height_multipliers.get(r).copied().unwrap_or(1.0);
            (m * resid.max(VARIANCE_FLOOR)).sqrt()
        })
        .collect();
    MoveScales {
        theta_sd: (theta_multiplier * var_log_theta.max(VARIANCE_FLOOR)).sqrt(),
        height_sd,
    }
}

/// Log-scale random walk on θ. `lp` holds the target at `state` and is
/// updated on acceptance.
pub fn mcmc_theta_move(
    state: &mut CoalState,
    lp: &mut f64,
    target: &dyn TargetDensity<CoalState>,
    sd: f64,
    rng: &mut ParticleRng,
) -> bool {
    if sd <= 0.0 {
        return false;
    }
    let z: f64 = rng.sample(StandardNormal);
    let proposal = CoalState {
        tree: state.tree.clone(),
        theta: state.theta * (sd * z).exp(),
    };
    let new_lp = target.log_density(&proposal);
    // log θ' − log θ = sd·z is the multiplicative Jacobian
    let log_ratio = new_lp - *lp + sd * z;
    if accept(rng, log_ratio, new_lp) {
        *state = proposal;
        *lp = new_lp;
        true
    } else {
        false
    }
}

fn accept(rng: &mut ParticleRng, log_ratio: f64, new_lp: f64) -> bool {
    new_lp > f64::NEG_INFINITY && !log_ratio.is_nan() && rng.random::<f64>().ln() < log_ratio
}

fn rank_of(state: &CoalState, v: usize, h: f64) -> usize {
    state
        .tree
        .internal_nodes()
        .filter(|&u| u != v && state.tree.height(u) < h)
        .count()
}

/// Truncated-normal move of internal node `v` between its highest child and
/// its parent (unbounded above for the root). The scale is picked by the
/// node's height rank before and after the move.
pub fn mcmc_height_move(
    state: &mut CoalState,
    v: usize,
    lp: &mut f64,
    target: &dyn TargetDensity<CoalState>,
    height_sd: &[f64],
    rng: &mut ParticleRng,
) -> bool {
    let tree = &state.tree;
    let [a, b] = tree.children(v).expect("height moves act on internal nodes");
    let lower = tree.height(a).max(tree.height(b));
    let upper = tree.parent(v).map_or(f64::INFINITY, |p| tree.height(p));
    let h = tree.height(v);
    let sd_fwd = height_sd[rank_of(state, v, h)];
    if sd_fwd <= 0.0 {
        return false;
    }
    let h_new = sample_truncated_normal(rng, h, sd_fwd, lower, upper);
    if !(h_new > lower && h_new < upper) {
        return false;
    }
    let sd_rev = height_sd[rank_of(state, v, h_new)];
    let mut proposal = state.clone();
    proposal.tree.set_height(v, h_new);
    let new_lp = target.log_density(&proposal);
    let log_ratio = new_lp - *lp + log_truncated_normal_pdf(h, h_new, sd_rev, lower, upper)
        - log_truncated_normal_pdf(h_new, h, sd_fwd, lower, upper);
    if accept(rng, log_ratio, new_lp) {
        *state = proposal;
        *lp = new_lp;
        true
    } else {
        false
    }
}

fn spr_candidates(state: &CoalState, v: usize) -> Vec<usize> {
    let sib = state.tree.sibling(v);
    let mut c = state.tree.regraft_candidates(v);
    c.retain(|x| Some(*x) != sib);
    c
}

/// Prune a uniformly chosen non-root subtree and regraft it at the same
/// height on a uniformly chosen other branch. Returns `None` when no
/// different branch exists (the state is unchanged).
pub fn mcmc_spr_move(
    state: &mut CoalState,
    lp: &mut f64,
    target: &dyn TargetDensity<CoalState>,
    rng: &mut ParticleRng,
) -> Option<bool> {
    let tree = &state.tree;
    if tree.leaf_count() < 3 {
        return None;
    }
    let root = tree.root();
    let mut v = rng.random_range(0..tree.node_count() - 1);
    if v >= root {
        v += 1;
    }
    let forward = spr_candidates(state, v);
    if forward.is_empty() {
        return None;
    }
    let c = forward[rng.random_range(0..forward.len())];
    let proposal = CoalState {
        tree: tree.prune_regraft(v, c),
        theta: state.theta,
    };
    let reverse = spr_candidates(&proposal, v).len();
    let new_lp = target.log_density(&proposal);
    let log_ratio = new_lp - *lp + (forward.len() as f64).ln() - (reverse as f64).ln();
    if accept(rng, log_ratio, new_lp) {
        *state = proposal;
        *lp = new_lp;
        Some(true)
    } else {
        Some(false)
    }
}

/// One sweep on a single particle: θ, every internal height in ascending
/// order, then `spr_moves` SPR proposals.
pub fn mcmc_sweep(
    state: &mut CoalState,
    target: &dyn TargetDensity<CoalState>,
    scales: &MoveScales,
    spr_moves: usize,
    rng: &mut ParticleRng,
) -> AcceptanceCounts {
    let mut counts = AcceptanceCounts {
        height: vec![(0, 0); state.tree.leaf_count().saturating_sub(1)],
        ..Default::default()
    };
    let mut lp = target.log_density(state);
    counts.theta.0 += 1;
    counts.theta.1 += usize::from(mcmc_theta_move(state, &mut lp, target, scales.theta_sd, rng));
    for v in state.tree.nodes_by_height() {
        let r = rank_of(state, v, state.tree.height(v));
        counts.height[r].0 += 1;
        counts.height[r].1 += usize::from(mcmc_height_move(state, v, &mut lp, target, &scales.height_sd, rng));
    }
    for _ in 0..spr_moves {
        if let Some(ok) = mcmc_spr_move(state, &mut lp, target, rng) {
            counts.spr.0 += 1;
            counts.spr.1 += usize::from(ok);
        }
    }
    counts
}

/// Move kernel combining all three moves, with scales adapted from the
/// cloud and the previous sweep's acceptance rates.
#[derive(Debug, Clone)]
pub struct CoalMcmc {
    pub spr_moves: usize,
    pub theta_multiplier: f64,
    pub height_multipliers: Vec<f64>,
    last: Option<AcceptanceCounts>,
    totals: AcceptanceCounts,
}

impl CoalMcmc {
    pub fn new(spr_moves: usize) -> Self {
        Self {
            spr_moves,
            theta_multiplier: 1.0,
            height_multipliers: Vec::new(),
            last: None,
            totals: AcceptanceCounts::default(),
        }
    }

    /// Counts accumulated over every application so far.
    pub fn totals(&self) -> &AcceptanceCounts {
        &self.totals
    }
}

impl MoveKernel<CoalState> for CoalMcmc {
    fn apply(&mut self, cloud: &mut ParticleCloud<CoalState>, target: &dyn TargetDensity<CoalState>) -> MoveReport {
        let ranks = cloud.states()[0].tree.leaf_count() - 1;
        self.height_multipliers.resize(ranks, 1.0);
        if let Some(last) = &self.last {
            if last.theta.0 > 0 {
                self.theta_multiplier = adapt_multiplier(self.theta_multiplier, last.theta_rate());
            }
            for (m, c) in self.height_multipliers.iter_mut().zip(&last.height) {
                if c.0 > 0 {
                    *m = adapt_multiplier(*m, rate(*c));
                }
            }
        }
        let scales = adapt_scales(cloud, self.theta_multiplier, &self.height_multipliers);
        let theta = [AtomicUsize::new(0), AtomicUsize::new(0)];
        let spr = [AtomicUsize::new(0), AtomicUsize::new(0)];
        let height: Vec<[AtomicUsize; 2]> = (0..ranks).map(|_| [AtomicUsize::new(0), AtomicUsize::new(0)]).collect();
        let spr_moves = self.spr_moves;
        cloud.for_each_particle(|_, state, rng| {
            let c = mcmc_sweep(state, target, &scales, spr_moves, rng);
            theta[0].fetch_add(c.theta.0, Ordering::Relaxed);
            theta[1].fetch_add(c.theta.1, Ordering::Relaxed);
            spr[0].fetch_add(c.spr.0, Ordering::Relaxed);
            spr[1].fetch_add(c.spr.1, Ordering::Relaxed);
            for (slot, v) in height.iter().zip(&c.height) {
                slot[0].fetch_add(v.0, Ordering::Relaxed);
                slot[1].fetch_add(v.1, Ordering::Relaxed);
            }
        });
        let pair = |a: &[AtomicUsize; 2]| (a[0].load(Ordering::Relaxed), a[1].load(Ordering::Relaxed));
        let counts = AcceptanceCounts {
            theta: pair(&theta),
            height: height.iter().map(pair).collect(),
            spr: pair(&spr),
        };
        self.totals.add(&counts);
        let proposed = counts.theta.0 + counts.spr.0 + counts.height.iter().map(|c| c.0).sum::<usize>();
        let accepted = counts.theta.1 + counts.spr.1 + counts.height.iter().map(|c| c.1).sum::<usize>();
        self.last = Some(counts);
        MoveReport { proposed, accepted }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalescent::tree::CoalTree;
    use crate::smc::particle_stream;

    fn state() -> CoalState {
        CoalState {
            tree: CoalTree::from_parts(
                vec![Some(3), Some(3), Some(4), Some(4), None],
                vec![[0, 1], [3, 2]],
                vec![0.0, 0.0, 0.0, 0.5, 1.5],
            )
            .unwrap(),
            theta: 0.4,
        }
    }

    #[test]
    fn multiplier_band() {
        assert_eq!(adapt_multiplier(1.5, 0.5), 1.5);
        assert_eq!(adapt_multiplier(1.5, 0.7), 3.0);
        assert_eq!(adapt_multiplier(1.5, 0.1), 0.75);
    }

    #[test]
    fn zero_scale_is_identity() {
        let mut s = state();
        let before = s.clone();
        let target = |x: &CoalState| -x.theta - x.tree.root_height();
        let scales = MoveScales {
            theta_sd: 0.0,
            height_sd: vec![0.0, 0.0],
        };
        let mut rng = particle_stream(1, 0);
        for _ in 0..10 {
            mcmc_sweep(&mut s, &target, &scales, 0, &mut rng);
        }
        assert_eq!(s, before);
    }

    #[test]
    fn two_leaf_spr_is_identity() {
        let mut s = CoalState {
            tree: CoalTree::cherry(1.0).unwrap(),
            theta: 1.0,
        };
        let target = |_: &CoalState| 0.0;
        let mut lp = 0.0;
        let mut rng = particle_stream(1, 0);
        assert_eq!(mcmc_spr_move(&mut s, &mut lp, &target, &mut rng), None);
    }

    #[test]
    fn moves_keep_tree_valid() {
        let mut s = state();
        // flat target on valid trees
        let target = |x: &CoalState| {
            if x.tree.validate().is_ok() && x.theta > 0.0 {
                -x.tree.root_height() - x.theta
            } else {
                f64::NEG_INFINITY
            }
        };
        let scales = MoveScales {
            theta_sd: 0.5,
            height_sd: vec![0.3, 0.3],
        };
        let mut rng = particle_stream(7, 0);
        let mut spr_accepted = 0;
        for _ in 0..500 {
            let c = mcmc_sweep(&mut s, &target, &scales, 3, &mut rng);
            s.tree.validate().unwrap();
            spr_accepted += c.spr.1;
        }
        assert!(spr_accepted > 0);
    }
}
