mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tsmc::coalescent::{
    majority_consensus, pruning_log_likelihood, sample_prior_tree, CoalTree, ConsensusTree, SeqAlignment,
};
use tsmc::gmm::{merge_inverse, split_transform, MixtureState, SplitAux};
use tsmc::io::{parse_config, Command, RunConfig};
use tsmc::numeric::{log_sum_exp, log_sum_exp_ordered};
use tsmc::smc::{cess, ess, stratified_from_uniforms};

fn weights() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), 0.001f64..10.0], 1..40).prop_filter("some mass", |w| {
        w.iter().any(|x| *x > 0.0)
    })
}

fn mixture() -> impl Strategy<Value = MixtureState> {
    (1usize..5).prop_flat_map(|k| {
        (
            prop::collection::vec(0.05f64..1.0, k),
            prop::collection::vec(-10.0f64..10.0, k),
            prop::collection::vec(0.05f64..20.0, k),
        )
            .prop_filter_map("distinct means", |(w, mut m, t)| {
                m.sort_by(f64::total_cmp);
                if m.windows(2).any(|p| p[1] - p[0] < 1e-3) {
                    return None;
                }
                let total: f64 = w.iter().sum();
                MixtureState::new(w.iter().map(|x| x / total).collect(), m, t).ok()
            })
    })
}

proptest! {
    #[test]
    fn stratified_counts_respect_strata(w in weights(), seed in any::<u64>()) {
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let u: Vec<f64> = (0..w.len()).map(|_| rand::Rng::random::<f64>(&mut r)).collect();
        let idx = stratified_from_uniforms(&w, &u);
        prop_assert_eq!(idx.len(), w.len());
        prop_assert!(idx.windows(2).all(|p| p[0] <= p[1]));
        let p = w.len() as f64;
        for (i, wi) in w.iter().enumerate() {
            let n = idx.iter().filter(|j| **j == i).count() as f64;
            if *wi == 0.0 {
                prop_assert_eq!(n, 0.0);
            } else {
                prop_assert!((n - wi * p).abs() < 2.0);
            }
        }
    }

    #[test]
    fn ordered_log_sum_exp_is_permutation_invariant(
        v in prop::collection::vec(-700.0f64..700.0, 1..30),
        seed in any::<u64>(),
    ) {
        let mut shuffled = v.clone();
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(shuffled.as_mut_slice(), &mut r);
        prop_assert_eq!(log_sum_exp_ordered(&v).to_bits(), log_sum_exp_ordered(&shuffled).to_bits());
        let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = log_sum_exp(&v);
        prop_assert!(lse >= max && lse <= max + (v.len() as f64).ln() + 1e-12);
    }

    #[test]
    fn cess_is_bounded_by_p(w in weights(), incr in prop::collection::vec(-20.0f64..20.0, 40)) {
        let total: f64 = w.iter().sum();
        let w: Vec<f64> = w.iter().map(|x| x / total).collect();
        let c = cess(&w, &incr[..w.len()]).unwrap();
        prop_assert!(c > 0.0 && c <= w.len() as f64 + 1e-9);
    }

    #[test]
    fn cess_of_uniform_cloud_is_ess_of_increments(incr in prop::collection::vec(-20.0f64..20.0, 1..40)) {
        let p = incr.len();
        let c = cess(&vec![1.0 / p as f64; p], &incr).unwrap();
        prop_assert!((c - ess(&incr).unwrap()).abs() < 1e-9 * p as f64);
    }

    #[test]
    fn merge_undoes_split(
        s in mixture(),
        u1 in 0.01f64..0.99,
        u2 in 0.01f64..0.99,
        u3 in 0.01f64..0.99,
        pick in any::<prop::sample::Index>(),
    ) {
        let aux = SplitAux { u1, u2, u3, component: pick.index(s.k()) };
        let (t, pair) = split_transform(&s, &aux);
        prop_assert!(t.is_valid());
        let (back, aux_back) = merge_inverse(&t, pair).unwrap();
        prop_assert_eq!(aux_back.component, aux.component);
        for i in 0..s.k() {
            prop_assert!((back.weights[i] - s.weights[i]).abs() < 1e-10);
            prop_assert!((back.means[i] - s.means[i]).abs() < 1e-9);
            prop_assert!((back.precisions[i] / s.precisions[i] - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn leaf_insertion_is_undone_by_removal(n in 2usize..9, seed in any::<u64>(), g in any::<prop::sample::Index>(), h in 0.001f64..5.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let tree = sample_prior_tree(n, &mut r);
        prop_assume!(!tree.internal_heights_ascending().iter().any(|x| (x - h).abs() < 1e-12));
        let grown = tree.insert_leaf(g.index(n), h).unwrap();
        prop_assert!(grown.validate().is_ok());
        prop_assert_eq!(grown.leaf_count(), n + 1);
        prop_assert_eq!(grown.sibling(n).map(|s| grown.leaves_below(s).contains(&g.index(n))), Some(true));
        prop_assert_eq!(grown.remove_leaf(n).unwrap(), tree);
    }

    #[test]
    fn unobserved_leaf_matches_removed_leaf(seed in any::<u64>(), theta in 0.05f64..3.0) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let tree = sample_prior_tree(5, &mut r);
        let records: Vec<(String, String)> = (0..5)
            .map(|i| (format!("s{i}"), common::dna_string(&common::random_dna(25, &mut r))))
            .collect();
        let aln = SeqAlignment::from_strings(&records).unwrap();
        let with_missing = pruning_log_likelihood(&tree, theta, &aln.patterns(5), Some(4)).unwrap();
        let reduced = pruning_log_likelihood(&tree.remove_leaf(4).unwrap(), theta, &aln.patterns(4), None).unwrap();
        prop_assert!((with_missing - reduced).abs() < 1e-9 * reduced.abs().max(1.0));
    }

    #[test]
    fn consensus_newick_round_trip(seed in any::<u64>(), n in 2usize..8, count in 1usize..20) {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let trees: Vec<CoalTree> = (0..count).map(|_| sample_prior_tree(n, &mut r)).collect();
        let refs: Vec<&CoalTree> = trees.iter().collect();
        let names: Vec<String> = (0..n).map(|i| format!("taxon_{i}")).collect();
        let weights: Vec<f64> = (0..count).map(|i| 1.0 + i as f64).collect();
        let c = majority_consensus(&refs, &weights, &names).unwrap();
        let text = c.to_newick();
        prop_assert_eq!(ConsensusTree::from_newick(&text).unwrap(), c);
    }

    #[test]
    fn config_text_round_trip(
        particles in 1usize..5000,
        alpha in 0.01f64..0.99,
        beta in 0.01f64..0.99,
        seed in any::<u64>(),
        t_max in 1usize..9,
        spr in 0usize..50,
        power in prop::sample::select(vec![0.0, 1.0, 2.0, 4.0]),
        gmm in any::<bool>(),
    ) {
        let command = if gmm { Command::GmmEvidence } else { Command::CoalescentOnline };
        let mut c = RunConfig::defaults(command, "data/input file.txt".into());
        c.particles = particles;
        c.resample_threshold = alpha;
        c.cess_target = beta;
        c.seed = seed;
        c.t_max = t_max;
        c.spr_moves = spr;
        c.lineage_power = power;
        prop_assert_eq!(parse_config(&c.to_config_text(), &[]).unwrap(), c);
    }
}
