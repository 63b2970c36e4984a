//! Online inference of a coalescent time-tree and mutation rate from DNA
//! sequences that arrive one at a time.

mod alignment;
mod bridge;
mod consensus;
mod likelihood;
mod mcmc;
mod online;
mod proposal;
mod tree;

pub use alignment::{compute_ordering, nucleotide_code, OrderingKind, SeqAlignment, SitePatterns};
pub use bridge::{
    insertion_log_weight, lambda_set, log_posterior, log_prior, sample_prior_state, CoalPriorToPosterior,
    CoalState, InsertionBridge,
};
pub use consensus::{majority_consensus, ConsensusNode, ConsensusTree};
pub use likelihood::{
    jc_branch_logprobs, jc_branch_probs, pairwise_log_likelihood, pairwise_sequence_log_likelihood,
    pruning_log_likelihood, theta_log_prior, THETA_PRIOR_RATE, THETA_PRIOR_SHAPE,
};
pub use mcmc::{
    adapt_multiplier, adapt_scales, mcmc_height_move, mcmc_spr_move, mcmc_sweep, mcmc_theta_move,
    AcceptanceCounts, CoalMcmc, MoveScales,
};
pub use online::{run_online_inference, OnlineConfig, StageResult};
pub use proposal::{
    height_log_pdf, lineage_log_probs, sample_height, sample_index, HeightKind, ProposalConfig, BETA_UPPER,
};
pub use tree::{coalescent_log_prior, coalescent_log_prior_heights, sample_prior_tree, CoalTree};
