use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A rooted binary time-tree with leaves at height 0.
///
/// Nodes `0..n` are the leaves in arrival order and `n..2n-1` are the
/// coalescence (internal) nodes, in no particular order. Internal heights are
/// distinct and every internal node sits strictly above both children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoalTree {
    parent: Vec<Option<usize>>,
    children: Vec<[usize; 2]>,
    heights: Vec<f64>,
}

impl CoalTree {
    pub fn single_leaf() -> Self {
        Self {
            parent: vec![None],
            children: vec![],
            heights: vec![0.0],
        }
    }

    /// Two leaves joined at height `h`.
    pub fn cherry(h: f64) -> Result<Self> {
        Self::from_parts(vec![Some(2), Some(2), None], vec![[0, 1]], vec![0.0, 0.0, h])
    }

    /// Checked constructor from parent links, internal child pairs
    /// (`children[i]` belongs to node `n + i`) and node heights.
    pub fn from_parts(parent: Vec<Option<usize>>, children: Vec<[usize; 2]>, heights: Vec<f64>) -> Result<Self> {
        let tree = Self {
            parent,
            children,
            heights,
        };
        tree.validate()?;
        Ok(tree)
    }

    pub fn leaf_count(&self) -> usize {
        self.children.len() + 1
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    pub fn is_leaf(&self, v: usize) -> bool {
        v < self.leaf_count()
    }

    pub fn root(&self) -> usize {
        if self.children.is_empty() {
            0
        } else {
            self.parent
                .iter()
                .position(|p| p.is_none())
                .expect("validated tree has a root")
        }
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v]
    }

    pub fn children(&self, v: usize) -> Option<[usize; 2]> {
        let n = self.leaf_count();
        (v >= n).then(|| self.children[v - n])
    }

    pub fn height(&self, v: usize) -> f64 {
        self.heights[v]
    }

    pub fn root_height(&self) -> f64 {
        self.heights[self.root()]
    }

    pub fn internal_nodes(&self) -> std::ops::Range<usize> {
        self.leaf_count()..self.node_count()
    }

    /// Internal nodes sorted by ascending height; children always precede
    /// their parent.
    pub fn nodes_by_height(&self) -> Vec<usize> {
        let mut nodes: Vec<usize> = self.internal_nodes().collect();
        nodes.sort_by(|a, b| self.heights[*a].total_cmp(&self.heights[*b]));
        nodes
    }

    /// Coalescence times in ascending order, `h^(n) < … < h^(2)`.
    pub fn internal_heights_ascending(&self) -> Vec<f64> {
        let mut h = self.heights[self.leaf_count()..].to_vec();
        h.sort_by(f64::total_cmp);
        h
    }

    pub fn sibling(&self, v: usize) -> Option<usize> {
        let p = self.parent[v]?;
        let [a, b] = self.children(p).expect("parent is internal");
        Some(if a == v { b } else { a })
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.parent.len();
        let n = self.children.len() + 1;
        if m != 2 * n - 1 || self.heights.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "tree with {m} nodes, {} internal, {} heights",
                self.children.len(),
                self.heights.len()
            )));
        }
        if self.heights[..n].iter().any(|h| *h != 0.0) {
            return Err(Error::InvalidArgument("leaves must sit at height 0".into()));
        }
        let roots = self.parent.iter().filter(|p| p.is_none()).count();
        if roots != 1 {
            return Err(Error::InvalidArgument(format!("tree has {roots} roots")));
        }
        for (i, pair) in self.children.iter().enumerate() {
            let v = n + i;
            if !(self.heights[v].is_finite() && self.heights[v] > 0.0) {
                return Err(Error::InvalidArgument(format!("node {v} has height {}", self.heights[v])));
            }
            if pair[0] == pair[1] {
                return Err(Error::InvalidArgument(format!("node {v} has repeated child")));
            }
            for &c in pair {
                if c >= m || self.parent[c] != Some(v) {
                    return Err(Error::InvalidArgument(format!("broken link between {v} and {c}")));
                }
                if self.heights[c] >= self.heights[v] {
                    return Err(Error::InvalidArgument(format!(
                        "node {v} is not above its child {c}"
                    )));
                }
            }
        }
        for (v, p) in self.parent.iter().enumerate() {
            if let Some(p) = *p {
                if p < n || p >= m || !self.children[p - n].contains(&v) {
                    return Err(Error::InvalidArgument(format!("broken link between {p} and {v}")));
                }
            }
        }
        let h = self.internal_heights_ascending();
        if h.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument("coalescence times must be distinct".into()));
        }
        Ok(())
    }

    /// Node whose branch (to its parent, or above the root) carries the
    /// lineage of `leaf` at height `h > 0`.
    pub fn lineage_at(&self, leaf: usize, h: f64) -> usize {
        let mut v = leaf;
        while let Some(p) = self.parent[v] {
            if self.heights[p] < h {
                v = p;
            } else {
                break;
            }
        }
        v
    }

    /// Leaves in the subtree rooted at `v`, ascending.
    pub fn leaves_below(&self, v: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![v];
        while let Some(u) = stack.pop() {
            match self.children(u) {
                Some([a, b]) => {
                    stack.push(a);
                    stack.push(b);
                }
                None => out.push(u),
            }
        }
        out.sort_unstable();
        out
    }

    /// `true` if `u` lies in the subtree rooted at `v` (including `v`).
    pub fn is_descendant(&self, u: usize, v: usize) -> bool {
        let mut x = Some(u);
        while let Some(w) = x {
            if w == v {
                return true;
            }
            x = self.parent[w];
        }
        false
    }

    /// Add leaf `n` joining the lineage of leaf `g` at height `h`. The new
    /// coalescence node splits the branch carrying `g` at `h`, or becomes the
    /// new root when `h` is above the current root.
    pub fn insert_leaf(&self, g: usize, h: f64) -> Result<Self> {
        let n = self.leaf_count();
        if g >= n {
            return Err(Error::InvalidArgument(format!("no leaf {g} in a tree of {n}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidArgument(format!("insertion height {h}")));
        }
        if self.heights[n..].contains(&h) {
            return Err(Error::InvalidArgument(format!("insertion height {h} ties an existing node")));
        }
        let remap = |v: usize| if v >= n { v + 1 } else { v };
        let m = self.node_count() + 2;
        let new_leaf = n;
        let joint = m - 1;
        let mut parent = vec![None; m];
        let mut heights = vec![0.0; m];
        let mut children = vec![[0, 0]; n];
        for v in 0..self.node_count() {
            parent[remap(v)] = self.parent[v].map(remap);
            heights[remap(v)] = self.heights[v];
        }
        for (i, pair) in self.children.iter().enumerate() {
            children[remap(n + i) - (n + 1)] = [remap(pair[0]), remap(pair[1])];
        }
        let c = remap(self.lineage_at(g, h));
        let above = parent[c];
        if let Some(p) = above {
            let slot = &mut children[p - (n + 1)];
            let i = usize::from(slot[1] == c);
            slot[i] = joint;
        }
        parent[joint] = above;
        parent[c] = Some(joint);
        parent[new_leaf] = Some(joint);
        heights[joint] = h;
        children[joint - (n + 1)] = [c, new_leaf];
        Ok(Self {
            parent,
            children,
            heights,
        })
    }

    /// Remove `leaf` and its parent, reconnecting the sibling. Leaves above
    /// `leaf` are renumbered down by one.
    pub fn remove_leaf(&self, leaf: usize) -> Result<Self> {
        let n = self.leaf_count();
        if leaf >= n || n < 2 {
            return Err(Error::InvalidArgument(format!("cannot remove leaf {leaf} of {n}")));
        }
        let p = self.parent[leaf].expect("leaf of a multi-leaf tree has a parent");
        let s = self.sibling(leaf).expect("leaf has a sibling");
        let gp = self.parent[p];
        let mut map = vec![usize::MAX; self.node_count()];
        let mut next = 0;
        for v in 0..self.node_count() {
            if v != leaf && v != p {
                map[v] = next;
                next += 1;
            }
        }
        let link = |v: usize| if v == p { s } else { v };
        let m = self.node_count() - 2;
        let mut parent = vec![None; m];
        let mut heights = vec![0.0; m];
        let mut children = vec![[0, 0]; n - 2];
        for v in 0..self.node_count() {
            if v == leaf || v == p {
                continue;
            }
            let up = if v == s { gp } else { self.parent[v] };
            parent[map[v]] = up.map(|u| map[u]);
            heights[map[v]] = self.heights[v];
            if let Some([a, b]) = self.children(v) {
                children[map[v] - (n - 1)] = [map[link(a)], map[link(b)]];
            }
        }
        Ok(Self {
            parent,
            children,
            heights,
        })
    }

    pub(crate) fn set_height(&mut self, v: usize, h: f64) {
        self.heights[v] = h;
    }

    /// Parent of `c` once the subtree at `v` (and its parent node) is pruned.
    fn pruned_parent(&self, c: usize, v: usize) -> Option<usize> {
        let p = self.parent[v].expect("pruned node is not the root");
        match self.parent[c] {
            Some(q) if q == p => self.parent[p],
            other => other,
        }
    }

    /// Branches of the tree without the subtree at `v` that are alive at the
    /// height of `v`'s parent. Each branch is named by its lower node.
    pub fn regraft_candidates(&self, v: usize) -> Vec<usize> {
        let Some(p) = self.parent[v] else {
            return Vec::new();
        };
        let h = self.heights[p];
        (0..self.node_count())
            .filter(|&c| c != p && !self.is_descendant(c, v))
            .filter(|&c| {
                self.heights[c] < h
                    && self
                        .pruned_parent(c, v)
                        .is_none_or(|q| self.heights[q] > h)
            })
            .collect()
    }

    /// Subtree prune and regraft at constant height: detach `v` with its
    /// parent node and reattach that node on the branch above `c`. `c` must
    /// be one of [`regraft_candidates`](Self::regraft_candidates)`(v)`.
    pub fn prune_regraft(&self, v: usize, c: usize) -> Self {
        let mut t = self.clone();
        let n = t.leaf_count();
        let p = t.parent[v].expect("pruned node is not the root");
        let s = t.sibling(v).expect("non-root node has a sibling");
        if c == s {
            return t;
        }
        let gp = t.parent[p];
        // detach
        if let Some(g) = gp {
            let slot = &mut t.children[g - n];
            let i = usize::from(slot[1] == p);
            slot[i] = s;
        }
        t.parent[s] = gp;
        // reattach above c
        let above = t.parent[c];
        if let Some(q) = above {
            let slot = &mut t.children[q - n];
            let i = usize::from(slot[1] == c);
            slot[i] = p;
        }
        t.parent[p] = above;
        t.parent[c] = Some(p);
        let slot = &mut t.children[p - n];
        let i = usize::from(slot[1] == v);
        slot[1 - i] = c;
        t
    }
}

/// Log density of a ranked, labelled history under the standard coalescent:
/// `-Σ_a C(a,2) l^(a)` where `l^(a)` is the time during which there are `a`
/// lineages.
pub fn coalescent_log_prior(tree: &CoalTree) -> f64 {
    coalescent_log_prior_heights(tree.leaf_count(), &tree.internal_heights_ascending())
}

/// [`coalescent_log_prior`] from the ascending coalescence times of an
/// `n`-leaf tree.
pub fn coalescent_log_prior_heights(n: usize, heights: &[f64]) -> f64 {
    let mut prev = 0.0;
    let mut total = 0.0;
    for (i, &h) in heights.iter().enumerate() {
        let a = (n - i) as f64;
        total -= 0.5 * a * (a - 1.0) * (h - prev);
        prev = h;
    }
    total
}

/// Simulate a tree from the coalescent prior.
pub fn sample_prior_tree<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CoalTree {
    let m = 2 * n - 1;
    let mut parent = vec![None; m];
    let mut heights = vec![0.0; m];
    let mut children = Vec::with_capacity(n.saturating_sub(1));
    let mut active: Vec<usize> = (0..n).collect();
    let mut time = 0.0;
    let mut next = n;
    while active.len() > 1 {
        let a = active.len() as f64;
        time += Exp::new(0.5 * a * (a - 1.0)).expect("positive rate").sample(rng);
        let i = rng.random_range(0..active.len());
        let x = active.swap_remove(i);
        let j = rng.random_range(0..active.len());
        let y = active.swap_remove(j);
        parent[x] = Some(next);
        parent[y] = Some(next);
        heights[next] = time;
        children.push([x, y]);
        active.push(next);
        next += 1;
    }
    CoalTree {
        parent,
        children,
        heights,
    }
}
