use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::tree::CoalTree;
use crate::error::{Error, Result};

/// Node of a (possibly multifurcating) summary tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusNode {
    pub name: Option<String>,
    pub children: Vec<usize>,
    /// Posterior weight of the clade below this node.
    pub support: Option<f64>,
    /// Length of the branch to the parent; `None` at the root.
    pub length: Option<f64>,
}

/// A tree in preorder: node 0 is the root and every node precedes its
/// children.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsensusTree {
    pub nodes: Vec<ConsensusNode>,
}

impl ConsensusTree {
    pub fn root(&self) -> &ConsensusNode {
        &self.nodes[0]
    }

    /// Leaf names in preorder.
    pub fn leaf_names(&self) -> Vec<&str> {
        self.nodes
            .iter()
            .filter(|n| n.children.is_empty())
            .filter_map(|n| n.name.as_deref())
            .collect()
    }

    /// Node heights, taking leaves at 0 and each parent at the highest
    /// `child height + branch length`.
    pub fn heights(&self) -> Vec<f64> {
        let mut h = vec![0.0; self.nodes.len()];
        for v in (0..self.nodes.len()).rev() {
            h[v] = self.nodes[v]
                .children
                .iter()
                .map(|&c| h[c] + self.nodes[c].length.unwrap_or(0.0))
                .fold(0.0, f64::max);
        }
        h
    }

    /// Clades (sorted leaf-name lists) of internal nodes with their support.
    pub fn clades(&self) -> Vec<(Vec<String>, Option<f64>)> {
        let mut below: Vec<Vec<String>> = vec![Vec::new(); self.nodes.len()];
        for v in (0..self.nodes.len()).rev() {
            let node = &self.nodes[v];
            if node.children.is_empty() {
                below[v] = node.name.iter().cloned().collect();
            } else {
                let mut all: Vec<String> = node.children.iter().flat_map(|&c| below[c].clone()).collect();
                all.sort();
                below[v] = all;
            }
        }
        (0..self.nodes.len())
            .filter(|&v| !self.nodes[v].children.is_empty())
            .map(|v| (below[v].clone(), self.nodes[v].support))
            .collect()
    }

    pub fn to_newick(&self) -> String {
        let mut out = String::new();
        self.write_node(0, &mut out);
        out.push(';');
        out
    }

    fn write_node(&self, v: usize, out: &mut String) {
        let node = &self.nodes[v];
        if !node.children.is_empty() {
            out.push('(');
            for (i, &c) in node.children.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                self.write_node(c, out);
            }
            out.push(')');
        }
        if let Some(name) = &node.name {
            out.push_str(&quote_label(name));
        }
        if let Some(s) = node.support {
            out.push_str(&format!("[{s}]"));
        }
        if let Some(l) = node.length {
            out.push_str(&format!(":{l}"));
        }
    }

    pub fn from_newick(text: &str) -> Result<Self> {
        let mut p = NewickParser {
            chars: text.trim().chars().collect(),
            pos: 0,
            nodes: Vec::new(),
        };
        p.node()?;
        p.skip_ws();
        if p.next() != Some(';') {
            return Err(p.error("expected `;`"));
        }
        p.skip_ws();
        if p.pos != p.chars.len() {
            return Err(p.error("trailing characters"));
        }
        Ok(Self { nodes: p.nodes })
    }
}

const SPECIAL: &[char] = &['(', ')', '[', ']', ':', ';', ',', '\''];

fn quote_label(name: &str) -> String {
    if name.is_empty() || name.chars().any(|c| c.is_whitespace() || SPECIAL.contains(&c)) {
        format!("'{}'", name.replace('\'', "''"))
    } else {
        name.to_string()
    }
}

struct NewickParser {
    chars: Vec<char>,
    pos: usize,
    nodes: Vec<ConsensusNode>,
}

impl NewickParser {
    fn error(&self, msg: &str) -> Error {
        Error::Newick(format!("{msg} at character {}", self.pos + 1))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn next(&mut self) -> Option<char> {
        let c = self.peek();
        self.pos += 1;
        c
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn node(&mut self) -> Result<usize> {
        self.skip_ws();
        let id = self.nodes.len();
        self.nodes.push(ConsensusNode {
            name: None,
            children: Vec::new(),
            support: None,
            length: None,
        });
        if self.peek() == Some('(') {
            self.pos += 1;
            loop {
                let c = self.node()?;
                self.nodes[id].children.push(c);
                self.skip_ws();
                match self.next() {
                    Some(',') => continue,
                    Some(')') => break,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error("expected `,` or `)`"));
                    }
                }
            }
        }
        self.skip_ws();
        self.nodes[id].name = self.label()?;
        self.skip_ws();
        if self.peek() == Some('[') {
            self.pos += 1;
            let s = self.number_until(&[']'])?;
            self.skip_ws();
            if self.next() != Some(']') {
                self.pos -= 1;
                return Err(self.error("expected `]`"));
            }
            self.nodes[id].support = Some(s);
        }
        self.skip_ws();
        if self.peek() == Some(':') {
            self.pos += 1;
            self.nodes[id].length = Some(self.number_until(&[',', ')', ';'])?);
        }
        if self.nodes[id].children.is_empty() && self.nodes[id].name.is_none() {
            return Err(self.error("leaf without a name"));
        }
        Ok(id)
    }

    fn label(&mut self) -> Result<Option<String>> {
        if self.peek() == Some('\'') {
            self.pos += 1;
            let mut s = String::new();
            loop {
                match self.next() {
                    Some('\'') if self.peek() == Some('\'') => {
                        self.pos += 1;
                        s.push('\'');
                    }
                    Some('\'') => return Ok(Some(s)),
                    Some(c) => s.push(c),
                    None => return Err(self.error("unterminated quoted label")),
                }
            }
        }
        let start = self.pos;
        while self
            .peek()
            .is_some_and(|c| !c.is_whitespace() && !SPECIAL.contains(&c))
        {
            self.pos += 1;
        }
        Ok((self.pos > start).then(|| self.chars[start..self.pos].iter().collect()))
    }

    fn number_until(&mut self, ends: &[char]) -> Result<f64> {
        let start = self.pos;
        while self.peek().is_some_and(|c| !ends.contains(&c) && !c.is_whitespace()) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<f64>()
            .map_err(|_| Error::Newick(format!("invalid number `{text}` at character {}", start + 1)))
    }
}

fn weighted_median(mut values: Vec<(f64, f64)>) -> f64 {
    values.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: f64 = values.iter().map(|v| v.1).sum();
    let mut acc = 0.0;
    for (x, w) in &values {
        acc += w;
        if acc >= 0.5 * total {
            return *x;
        }
    }
    values.last().map_or(0.0, |v| v.0)
}

/// Majority-rule consensus of weighted trees on a common leaf set.
///
/// Clades with total weight above one half are kept (they are necessarily
/// compatible). Each kept clade's height is the weighted median of its node
/// heights over the trees that contain it, raised if needed so that no
/// parent sits below a child.
/// Total weight of a clade and its `(height, weight)` observations.
type CladeTally = (f64, Vec<(f64, f64)>);

pub fn majority_consensus(trees: &[&CoalTree], weights: &[f64], names: &[String]) -> Result<ConsensusTree> {
    if trees.is_empty() || trees.len() != weights.len() {
        return Err(Error::DimensionMismatch("one weight per tree required".into()));
    }
    let n = trees[0].leaf_count();
    if trees.iter().any(|t| t.leaf_count() != n) || names.len() != n {
        return Err(Error::DimensionMismatch("trees must share the leaf set".into()));
    }
    let total: f64 = weights.iter().sum();
    let mut tally: HashMap<Vec<usize>, CladeTally> = HashMap::new();
    for (tree, &w) in trees.iter().zip(weights) {
        let w = w / total;
        for v in tree.internal_nodes() {
            let entry = tally.entry(tree.leaves_below(v)).or_insert((0.0, Vec::new()));
            entry.0 += w;
            entry.1.push((tree.height(v), w));
        }
    }
    let mut clades: Vec<(Vec<usize>, f64, f64)> = tally
        .into_iter()
        .filter(|(c, (s, _))| *s > 0.5 || c.len() == n)
        .map(|(c, (s, hs))| (c, s, weighted_median(hs)))
        .collect();
    clades.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
    if clades.is_empty() {
        // a single leaf
        return Ok(ConsensusTree {
            nodes: vec![ConsensusNode {
                name: Some(names[0].clone()),
                children: vec![],
                support: None,
                length: None,
            }],
        });
    }
    // Items 0..n are leaves, n.. are clades in ascending size.
    let contains = |big: &[usize], small: &[usize]| small.iter().all(|x| big.binary_search(x).is_ok());
    let m = n + clades.len();
    let mut parent = vec![None; m];
    for leaf in 0..n {
        parent[leaf] = clades.iter().position(|c| c.0.binary_search(&leaf).is_ok()).map(|i| n + i);
    }
    for i in 0..clades.len() {
        parent[n + i] = (i + 1..clades.len())
            .find(|&j| clades[j].0.len() > clades[i].0.len() && contains(&clades[j].0, &clades[i].0))
            .map(|j| n + j);
    }
    let mut height = vec![0.0; m];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); m];
    for v in 0..m {
        if let Some(p) = parent[v] {
            children[p].push(v);
        }
    }
    for i in 0..clades.len() {
        let v = n + i;
        let lift = children[v].iter().map(|&c| height[c]).fold(0.0, f64::max);
        height[v] = clades[i].2.max(lift);
    }
    let min_leaf = |v: usize| if v < n { v } else { clades[v - n].0[0] };
    for c in children.iter_mut() {
        c.sort_by_key(|&v| min_leaf(v));
    }
    let root = n + clades.len() - 1;
    let mut nodes = Vec::with_capacity(m);
    let mut stack = vec![(root, usize::MAX)];
    let mut new_id = vec![0; m];
    while let Some((v, up)) = stack.pop() {
        let id = nodes.len();
        new_id[v] = id;
        nodes.push(ConsensusNode {
            name: (v < n).then(|| names[v].clone()),
            children: Vec::new(),
            support: (v >= n).then(|| clades[v - n].1),
            length: parent[v].map(|p| height[p] - height[v]),
        });
        if up != usize::MAX {
            let pid = new_id[up];
            nodes[pid].children.push(id);
        }
        for &c in children[v].iter().rev() {
            stack.push((c, v));
        }
    }
    Ok(ConsensusTree { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("s{i}")).collect()
    }

    fn cat(first: [usize; 2], other: usize, h: (f64, f64)) -> CoalTree {
        let mut parent = vec![None; 5];
        parent[first[0]] = Some(3);
        parent[first[1]] = Some(3);
        parent[other] = Some(4);
        parent[3] = Some(4);
        CoalTree::from_parts(parent, vec![first, [3, other]], vec![0.0, 0.0, 0.0, h.0, h.1]).unwrap()
    }

    #[test]
    fn identical_trees_full_support() {
        let t = cat([0, 1], 2, (0.5, 1.5));
        let c = majority_consensus(&[&t, &t, &t], &[1.0, 2.0, 3.0], &names(3)).unwrap();
        assert_eq!(c.to_newick(), "((s0:0.5,s1:0.5)[1]:1,s2:1.5)[1];");
        let h = c.heights();
        assert_eq!(h[0], 1.5);
    }

    #[test]
    fn conflicting_halves_keep_only_shared_clades() {
        let a = cat([0, 1], 2, (0.5, 1.5));
        let b = cat([1, 2], 0, (0.5, 1.5));
        let c = majority_consensus(&[&a, &b], &[1.0, 1.0], &names(3)).unwrap();
        assert_eq!(c.clades().len(), 1);
        assert_eq!(c.root().children.len(), 3);
    }

    #[test]
    fn newick_round_trip_with_quoting() {
        let t = cat([0, 2], 1, (0.123456789012345, 2.0));
        let nm = vec!["a b".to_string(), "it's".to_string(), "c:d".to_string()];
        let c = majority_consensus(&[&t], &[1.0], &nm).unwrap();
        let text = c.to_newick();
        assert_eq!(ConsensusTree::from_newick(&text).unwrap(), c);
    }

    #[test]
    fn parse_errors() {
        assert!(ConsensusTree::from_newick("(a,b)").is_err());
        assert!(ConsensusTree::from_newick("(a,b;").is_err());
        assert!(ConsensusTree::from_newick("(a:x,b);").is_err());
        assert!(ConsensusTree::from_newick("(a,);").is_err());
    }
}
