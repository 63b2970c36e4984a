use super::alignment::SitePatterns;
use super::tree::CoalTree;
use crate::error::{Error, Result};
use crate::numeric::log_gamma_pdf;

/// Shape and rate of the Gamma prior on the mutation parameter θ.
pub const THETA_PRIOR_SHAPE: f64 = 1.0;
pub const THETA_PRIOR_RATE: f64 = 5.0;

pub fn theta_log_prior(theta: f64) -> f64 {
    log_gamma_pdf(theta, THETA_PRIOR_SHAPE, THETA_PRIOR_RATE)
}

/// Jukes–Cantor transition probabilities along a branch of duration `b`:
/// `(P_same, P_diff)` where `P_diff` is per off-diagonal letter.
pub fn jc_branch_probs(theta: f64, b: f64) -> (f64, f64) {
    let e = (-2.0 * theta * b / 3.0).exp();
    (0.25 + 0.75 * e, 0.25 - 0.25 * e)
}

/// Logarithms of [`jc_branch_probs`], accurate for short branches.
pub fn jc_branch_logprobs(theta: f64, b: f64) -> (f64, f64) {
    let x = -2.0 * theta * b / 3.0;
    let same = (0.75 * x.exp_m1()).ln_1p();
    let diff = (-0.25 * x.exp_m1()).ln();
    (same, diff)
}

/// Felsenstein pruning under Jukes–Cantor with a uniform root distribution.
///
/// `patterns` must have one row per leaf. A leaf named by `missing` is
/// treated as unobserved, which gives the likelihood of the tree with that
/// leaf removed.
pub fn pruning_log_likelihood(
    tree: &CoalTree,
    theta: f64,
    patterns: &SitePatterns,
    missing: Option<usize>,
) -> Result<f64> {
    let n = tree.leaf_count();
    if patterns.rows != n {
        return Err(Error::DimensionMismatch(format!(
            "tree has {n} leaves but the alignment has {} rows",
            patterns.rows
        )));
    }
    Ok(pruning_unchecked(tree, theta, patterns, missing))
}

const RESCALE_BELOW: f64 = 1e-150;

pub(crate) fn pruning_unchecked(
    tree: &CoalTree,
    theta: f64,
    patterns: &SitePatterns,
    missing: Option<usize>,
) -> f64 {
    let n = tree.leaf_count();
    let order = tree.nodes_by_height();
    // (P_same, P_diff) on the branch above each node
    let probs: Vec<(f64, f64)> = (0..tree.node_count())
        .map(|v| match tree.parent(v) {
            Some(p) => jc_branch_probs(theta, tree.height(p) - tree.height(v)),
            None => (1.0, 0.0),
        })
        .collect();
    let root = tree.root();
    let mut partial = vec![[0.0f64; 4]; tree.node_count()];
    let mut total = 0.0;
    for (col, &count) in patterns.columns.iter().zip(&patterns.counts) {
        let mut log_scale = 0.0;
        for (leaf, &code) in col.iter().enumerate().take(n) {
            partial[leaf] = if Some(leaf) == missing {
                [1.0; 4]
            } else {
                let mut e = [0.0; 4];
                e[code as usize] = 1.0;
                e
            };
        }
        for &v in &order {
            let [a, b] = tree.children(v).expect("internal node");
            let mut out = [1.0; 4];
            for c in [a, b] {
                let (ps, pd) = probs[c];
                let lc = partial[c];
                let sum = lc[0] + lc[1] + lc[2] + lc[3];
                for x in 0..4 {
                    out[x] *= pd * sum + (ps - pd) * lc[x];
                }
            }
            let max = out.iter().copied().fold(0.0, f64::max);
            if max > 0.0 && max < RESCALE_BELOW {
                out.iter_mut().for_each(|o| *o /= max);
                log_scale += max.ln();
            }
            partial[v] = out;
        }
        let site: f64 = 0.25 * partial[root].iter().sum::<f64>();
        total += count * (site.ln() + log_scale);
    }
    total
}

/// Log-likelihood of `M` differing and `N − M` matching sites between two
/// sequences that coalesce at height `h`, treating each site as
/// same/different.
pub fn pairwise_log_likelihood(m: usize, n: usize, theta: f64, h: f64) -> f64 {
    let x = -4.0 * theta * h / 3.0;
    let differ = -0.75 * x.exp_m1();
    let same = 1.0 - differ;
    let mut out = 0.0;
    if m > 0 {
        out += m as f64 * differ.ln();
    }
    if n > m {
        out += (n - m) as f64 * same.ln();
    }
    out
}

/// The same pair likelihood resolved to the actual letters: the first
/// sequence is drawn uniformly and each differing site picks one of the
/// three other letters.
pub fn pairwise_sequence_log_likelihood(m: usize, n: usize, theta: f64, h: f64) -> f64 {
    pairwise_log_likelihood(m, n, theta, h) + n as f64 * 0.25f64.ln() - m as f64 * 3f64.ln()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coalescent::alignment::SeqAlignment;

    #[test]
    fn branch_limits() {
        assert_eq!(jc_branch_probs(0.3, 0.0), (1.0, 0.0));
        let (s, d) = jc_branch_probs(0.3, 1e6);
        assert!((s - 0.25).abs() < 1e-15 && (d - 0.25).abs() < 1e-15);
        let (ls, ld) = jc_branch_logprobs(0.1, 2.0);
        let (s, d) = jc_branch_probs(0.1, 2.0);
        assert!((ls - s.ln()).abs() < 1e-14 && (ld - d.ln()).abs() < 1e-14);
        assert!((s + 3.0 * d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_leaf_is_uniform() {
        let a = SeqAlignment::from_strings(&[("x", "ACGTTA")]).unwrap();
        let l = pruning_log_likelihood(&CoalTree::single_leaf(), 0.4, &a.patterns(1), None).unwrap();
        assert!((l - 6.0 * 0.25f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn two_leaves_match_pair_formula() {
        // (θ, h, M, N) = (0.1, 2, 3, 10)
        let a = SeqAlignment::from_strings(&[("x", "ACGTACGTAA"), ("y", "ACGTACGCCC")]).unwrap();
        assert_eq!(a.snp_distance(0, 1), 3);
        let tree = CoalTree::cherry(2.0).unwrap();
        let l = pruning_log_likelihood(&tree, 0.1, &a.patterns(2), None).unwrap();
        let p = pairwise_sequence_log_likelihood(3, 10, 0.1, 2.0);
        assert!((l - p).abs() < 1e-12, "{l} vs {p}");
        let offset = pairwise_log_likelihood(3, 10, 0.1, 2.0) - l;
        assert!((offset - (3.0 * 3f64.ln() - 10.0 * 0.25f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn missing_leaf_marginalises() {
        let a = SeqAlignment::from_strings(&[("x", "ACGTAC"), ("y", "ACGAAC")]).unwrap();
        let tree = CoalTree::cherry(0.7).unwrap();
        let l = pruning_log_likelihood(&tree, 0.5, &a.patterns(2), Some(1)).unwrap();
        assert!((l - 6.0 * 0.25f64.ln()).abs() < 1e-13);
    }

    #[test]
    fn pair_formula_limits() {
        assert_eq!(pairwise_log_likelihood(0, 10, 0.5, 0.0), 0.0);
        assert_eq!(pairwise_log_likelihood(2, 10, 0.5, 0.0), f64::NEG_INFINITY);
        let sat = pairwise_log_likelihood(4, 10, 0.5, 1e4);
        assert!((sat - (4.0 * 0.75f64.ln() + 6.0 * 0.25f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn pair_formula_maximiser() {
        let (m, n, theta) = (7usize, 40usize, 0.8);
        let closed = -3.0 / (4.0 * theta) * (1.0 - 4.0 * m as f64 / (3.0 * n as f64)).ln();
        // golden-section search
        let f = |h: f64| -pairwise_log_likelihood(m, n, theta, h);
        let (mut a, mut b) = (1e-6, 10.0);
        let g = (5f64.sqrt() - 1.0) / 2.0;
        for _ in 0..200 {
            let c = b - g * (b - a);
            let d = a + g * (b - a);
            if f(c) < f(d) {
                b = d;
            } else {
                a = c;
            }
        }
        assert!((0.5 * (a + b) - closed).abs() < 1e-7);
    }
}
