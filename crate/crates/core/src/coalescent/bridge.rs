use serde::{Deserialize, Serialize};

use super::alignment::{SeqAlignment, SitePatterns};
use super::likelihood::{pruning_unchecked, theta_log_prior};
use super::proposal::{height_log_pdf, lineage_log_probs, sample_height, sample_index, ProposalConfig};
use super::tree::{coalescent_log_prior, coalescent_log_prior_heights, sample_prior_tree, CoalTree};
use crate::numeric::log_sum_exp;
use crate::smc::{BridgeSpec, ParticleRng};
use rand_distr::{Distribution, Gamma};

/// A time-tree together with the mutation parameter θ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalState {
    pub tree: CoalTree,
    pub theta: f64,
}

/// Draw `(tree, θ)` from the prior.
pub fn sample_prior_state(n: usize, rng: &mut ParticleRng) -> CoalState {
    let theta_dist = Gamma::new(
        super::likelihood::THETA_PRIOR_SHAPE,
        1.0 / super::likelihood::THETA_PRIOR_RATE,
    )
    .expect("valid gamma");
    CoalState {
        tree: sample_prior_tree(n, rng),
        theta: theta_dist.sample(rng),
    }
}

/// Joint prior of tree and θ.
pub fn log_prior(state: &CoalState) -> f64 {
    if !(state.theta > 0.0 && state.theta.is_finite()) {
        return f64::NEG_INFINITY;
    }
    coalescent_log_prior(&state.tree) + theta_log_prior(state.theta)
}

/// Unnormalised posterior given the first `patterns.rows` sequences.
pub fn log_posterior(state: &CoalState, patterns: &SitePatterns) -> f64 {
    let lp = log_prior(state);
    if lp == f64::NEG_INFINITY {
        return lp;
    }
    lp + pruning_unchecked(&state.tree, state.theta, patterns, None)
}

/// Annealing from the prior to the posterior of a fixed leaf set.
pub struct CoalPriorToPosterior {
    pub patterns: SitePatterns,
}

impl BridgeSpec<CoalState> for CoalPriorToPosterior {
    fn log_target_from(&self, state: &CoalState) -> f64 {
        log_prior(state)
    }

    fn log_target_to(&self, state: &CoalState) -> f64 {
        log_posterior(state, &self.patterns)
    }
}

/// Leaves whose lineage runs through the branch that the newest leaf joined:
/// those below the newest leaf's sibling.
pub fn lambda_set(tree: &CoalTree) -> Vec<usize> {
    let newest = tree.leaf_count() - 1;
    let sib = tree.sibling(newest).expect("tree has at least two leaves");
    tree.leaves_below(sib)
}

/// Transition that adds sequence `t` (0-based) to trees on sequences
/// `0..t`.
pub struct InsertionBridge {
    /// Columns of sequences `0..=t`.
    pub patterns: SitePatterns,
    /// SNP distance from the new sequence to each existing one.
    pub distances: Vec<usize>,
    pub n_sites: usize,
    pub proposal: ProposalConfig,
}

impl InsertionBridge {
    /// Bridge adding sequence `t` of `alignment`.
    pub fn new(alignment: &SeqAlignment, t: usize, proposal: ProposalConfig) -> Self {
        Self {
            patterns: alignment.patterns(t + 1),
            distances: (0..t).map(|s| alignment.snp_distance(s, t)).collect(),
            n_sites: alignment.site_count(),
            proposal,
        }
    }

    /// `log Σ_{s∈Λ} χ_g(s) χ_h(h | s)` for the newest leaf of `state`.
    pub fn log_proposal_mass(&self, state: &CoalState) -> f64 {
        let tree = &state.tree;
        let newest = tree.leaf_count() - 1;
        let h = tree.height(tree.parent(newest).expect("newest leaf has a parent"));
        let lineage = lineage_log_probs(&self.distances, self.n_sites, state.theta, self.proposal.lineage_power);
        let terms: Vec<f64> = lambda_set(tree)
            .into_iter()
            .map(|s| {
                lineage[s]
                    + height_log_pdf(h, self.distances[s], self.n_sites, state.theta, self.proposal.height_kind)
            })
            .collect();
        log_sum_exp(&terms)
    }
}

impl BridgeSpec<CoalState> for InsertionBridge {
    /// Previous posterior on the tree without the newest leaf, times the
    /// proposal summed over every lineage that could have produced the
    /// attachment point.
    fn log_target_from(&self, state: &CoalState) -> f64 {
        if !(state.theta > 0.0 && state.theta.is_finite()) {
            return f64::NEG_INFINITY;
        }
        let tree = &state.tree;
        let n = tree.leaf_count();
        let newest = n - 1;
        let joint = tree.parent(newest).expect("newest leaf has a parent");
        let mut heights = tree.internal_heights_ascending();
        let pos = heights
            .iter()
            .position(|h| *h == tree.height(joint))
            .expect("joint height present");
        heights.remove(pos);
        coalescent_log_prior_heights(n - 1, &heights)
            + theta_log_prior(state.theta)
            + pruning_unchecked(tree, state.theta, &self.patterns, Some(newest))
            + self.log_proposal_mass(state)
    }

    fn log_target_to(&self, state: &CoalState) -> f64 {
        log_posterior(state, &self.patterns)
    }

    fn transform(&self, state: &CoalState, rng: &mut ParticleRng) -> CoalState {
        let lineage = lineage_log_probs(&self.distances, self.n_sites, state.theta, self.proposal.lineage_power);
        let g = sample_index(&lineage, rng);
        loop {
            let h = sample_height(self.distances[g], self.n_sites, state.theta, self.proposal.height_kind, rng);
            if let Ok(tree) = state.tree.insert_leaf(g, h) {
                return CoalState {
                    tree,
                    theta: state.theta,
                };
            }
        }
    }
}

/// Incremental log-weight of an insertion: next posterior over the
/// pushed-forward density at `new_state`.
pub fn insertion_log_weight(bridge: &InsertionBridge, new_state: &CoalState) -> f64 {
    bridge.log_ratio(new_state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalescent::likelihood::pruning_log_likelihood;
    use crate::coalescent::proposal::HeightKind;

    fn aln() -> SeqAlignment {
        SeqAlignment::from_strings(&[
            ("a", "ACGTACGTACGTAAAA"),
            ("b", "ACGTACGTACGTAAAC"),
            ("c", "ACGAACGTTCGTAAAC"),
        ])
        .unwrap()
    }

    fn caterpillar() -> CoalTree {
        CoalTree::from_parts(
            vec![Some(3), Some(3), Some(4), Some(4), None],
            vec![[0, 1], [3, 2]],
            vec![0.0, 0.0, 0.0, 0.5, 1.5],
        )
        .unwrap()
    }

    #[test]
    fn lambda_sets() {
        let t = caterpillar();
        // pendant branch of leaf 2 below its first coalescence
        assert_eq!(lambda_set(&t.insert_leaf(2, 0.3).unwrap()), vec![2]);
        assert_eq!(lambda_set(&t.insert_leaf(0, 2.0).unwrap()), vec![0, 1, 2]);
        // internal branch above the cherry
        assert_eq!(lambda_set(&t.insert_leaf(1, 1.0).unwrap()), vec![0, 1]);
    }

    #[test]
    fn from_density_uses_reduced_tree() {
        let a = aln();
        let bridge = InsertionBridge::new(&a, 2, ProposalConfig::default());
        let base = CoalState {
            tree: CoalTree::cherry(0.4).unwrap(),
            theta: 0.3,
        };
        let new = CoalState {
            tree: base.tree.insert_leaf(0, 0.9).unwrap(),
            theta: 0.3,
        };
        let expected = log_posterior(&base, &a.patterns(2)) + bridge.log_proposal_mass(&new);
        assert!((bridge.log_target_from(&new) - expected).abs() < 1e-12);
        let full = pruning_log_likelihood(&new.tree, 0.3, &a.patterns(3), None).unwrap();
        let to = coalescent_log_prior(&new.tree) + theta_log_prior(0.3) + full;
        assert!((bridge.log_target_to(&new) - to).abs() < 1e-12);
    }

    #[test]
    fn two_leaf_insertion_collapses() {
        let a = aln();
        let proposal = ProposalConfig {
            height_kind: HeightKind::Laplace,
            ..ProposalConfig::default()
        };
        let bridge = InsertionBridge::new(&a, 1, proposal);
        let base = CoalState {
            tree: CoalTree::single_leaf(),
            theta: 0.7,
        };
        let new = CoalState {
            tree: base.tree.insert_leaf(0, 0.25).unwrap(),
            theta: 0.7,
        };
        let w = insertion_log_weight(&bridge, &new);
        let expected = log_posterior(&new, &a.patterns(2))
            - log_posterior(&base, &a.patterns(1))
            - height_log_pdf(0.25, 1, 16, 0.7, HeightKind::Laplace);
        assert!((w - expected).abs() < 1e-12);
    }
}
