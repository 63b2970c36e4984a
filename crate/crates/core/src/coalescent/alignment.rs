use std::collections::HashMap;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Named DNA sequences of equal length, stored as codes `0..4` for `ACGT`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeqAlignment {
    names: Vec<String>,
    sequences: Vec<Vec<u8>>,
}

/// Code of a nucleotide letter, case-insensitive.
pub fn nucleotide_code(c: char) -> Option<u8> {
    match c.to_ascii_uppercase() {
        'A' => Some(0),
        'C' => Some(1),
        'G' => Some(2),
        'T' => Some(3),
        _ => None,
    }
}

impl SeqAlignment {
    pub fn new(names: Vec<String>, sequences: Vec<Vec<u8>>) -> Result<Self> {
        if names.len() != sequences.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} names for {} sequences",
                names.len(),
                sequences.len()
            )));
        }
        if sequences.is_empty() {
            return Err(Error::InvalidArgument("alignment has no sequences".into()));
        }
        if let Some((i, _)) = sequences.iter().enumerate().find(|(_, s)| s.iter().any(|c| *c > 3)) {
            return Err(Error::InvalidArgument(format!("sequence `{}` has an invalid code", names[i])));
        }
        let len = sequences[0].len();
        if let Some(i) = sequences.iter().position(|s| s.len() != len) {
            return Err(Error::InvalidArgument(format!(
                "sequence `{}` has length {} but `{}` has length {len}",
                names[i],
                sequences[i].len(),
                names[0]
            )));
        }
        if len == 0 {
            return Err(Error::InvalidArgument("alignment has no sites".into()));
        }
        Ok(Self { names, sequences })
    }

    /// Build from letter strings; rejects anything outside `ACGT`.
    pub fn from_strings<S: AsRef<str>>(records: &[(S, S)]) -> Result<Self> {
        let mut names = Vec::with_capacity(records.len());
        let mut seqs = Vec::with_capacity(records.len());
        for (name, seq) in records {
            let codes = seq
                .as_ref()
                .chars()
                .enumerate()
                .map(|(i, c)| {
                    nucleotide_code(c).ok_or_else(|| {
                        Error::InvalidArgument(format!(
                            "sequence `{}` position {}: invalid symbol `{c}`",
                            name.as_ref(),
                            i + 1
                        ))
                    })
                })
                .collect::<Result<Vec<u8>>>()?;
            names.push(name.as_ref().to_string());
            seqs.push(codes);
        }
        Self::new(names, seqs)
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn site_count(&self) -> usize {
        self.sequences[0].len()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn sequence(&self, i: usize) -> &[u8] {
        &self.sequences[i]
    }

    /// Sequences rearranged so that row `i` of the result is row `order[i]`.
    pub fn reordered(&self, order: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        for &i in order {
            if i >= self.len() || std::mem::replace(&mut seen[i], true) {
                return Err(Error::InvalidArgument("ordering is not a permutation".into()));
            }
        }
        if order.len() != self.len() {
            return Err(Error::InvalidArgument("ordering is not a permutation".into()));
        }
        Ok(Self {
            names: order.iter().map(|&i| self.names[i].clone()).collect(),
            sequences: order.iter().map(|&i| self.sequences[i].clone()).collect(),
        })
    }

    /// Number of sites at which sequences `i` and `j` differ.
    pub fn snp_distance(&self, i: usize, j: usize) -> usize {
        self.sequences[i]
            .iter()
            .zip(&self.sequences[j])
            .filter(|(a, b)| a != b)
            .count()
    }

    pub fn distance_matrix(&self) -> Vec<Vec<usize>> {
        let n = self.len();
        let mut d = vec![vec![0; n]; n];
        for i in 0..n {
            for j in i + 1..n {
                let v = self.snp_distance(i, j);
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        d
    }

    /// Distinct columns of the first `rows` sequences with their counts.
    pub fn patterns(&self, rows: usize) -> SitePatterns {
        let rows = rows.min(self.len());
        let mut index: HashMap<Vec<u8>, usize> = HashMap::new();
        let mut columns: Vec<Vec<u8>> = Vec::new();
        let mut counts: Vec<f64> = Vec::new();
        for site in 0..self.site_count() {
            let col: Vec<u8> = (0..rows).map(|r| self.sequences[r][site]).collect();
            match index.get(&col) {
                Some(&k) => counts[k] += 1.0,
                None => {
                    index.insert(col.clone(), columns.len());
                    columns.push(col);
                    counts.push(1.0);
                }
            }
        }
        SitePatterns {
            rows,
            columns,
            counts,
        }
    }
}

/// Compressed alignment columns: each distinct column once, with its count.
#[derive(Debug, Clone, PartialEq)]
pub struct SitePatterns {
    pub rows: usize,
    pub columns: Vec<Vec<u8>>,
    pub counts: Vec<f64>,
}

impl SitePatterns {
    pub fn len(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.columns.is_empty()
    }

    pub fn site_count(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Rule for the order in which sequences are added.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrderingKind {
    Nearest,
    Furthest,
}

impl FromStr for OrderingKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(Self::Nearest),
            "furthest" => Ok(Self::Furthest),
            other => Err(format!("unknown ordering `{other}`")),
        }
    }
}

impl std::fmt::Display for OrderingKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Nearest => "nearest",
            Self::Furthest => "furthest",
        })
    }
}

/// Greedy ordering on SNP distances. Starts with the closest (or most
/// distant) pair, then repeatedly appends the sequence nearest to (or
/// furthest from) the selected set. Ties go to the lowest index.
pub fn compute_ordering(alignment: &SeqAlignment, kind: OrderingKind) -> Vec<usize> {
    let n = alignment.len();
    if n <= 2 {
        return (0..n).collect();
    }
    let d = alignment.distance_matrix();
    let better = |a: usize, b: usize| match kind {
        OrderingKind::Nearest => a < b,
        OrderingKind::Furthest => a > b,
    };
    let mut seed = (0, 1);
    for i in 0..n {
        for j in i + 1..n {
            if better(d[i][j], d[seed.0][seed.1]) {
                seed = (i, j);
            }
        }
    }
    let mut order = vec![seed.0, seed.1];
    let mut used = vec![false; n];
    used[seed.0] = true;
    used[seed.1] = true;
    while order.len() < n {
        let score = |c: usize| {
            let it = order.iter().map(|&s| d[c][s]);
            match kind {
                OrderingKind::Nearest => it.min().unwrap(),
                OrderingKind::Furthest => it.max().unwrap(),
            }
        };
        let mut best: Option<(usize, usize)> = None;
        for c in (0..n).filter(|c| !used[*c]) {
            let s = score(c);
            if best.is_none_or(|(_, b)| better(s, b)) {
                best = Some((c, s));
            }
        }
        let (c, _) = best.expect("unused sequence remains");
        used[c] = true;
        order.push(c);
    }
    order
}

#[cfg(test)]
mod tests {
    use super::*;

    fn aln(seqs: &[&str]) -> SeqAlignment {
        let recs: Vec<(String, String)> = seqs
            .iter()
            .enumerate()
            .map(|(i, s)| (format!("s{i}"), s.to_string()))
            .collect();
        SeqAlignment::from_strings(&recs).unwrap()
    }

    #[test]
    fn rejects_bad_symbols_and_lengths() {
        assert!(SeqAlignment::from_strings(&[("a", "ACGN")]).is_err());
        let err = SeqAlignment::from_strings(&[("a", "ACG"), ("b", "AC")]).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('a') && msg.contains('b'));
    }

    #[test]
    fn patterns_compress_columns() {
        let a = aln(&["AACA", "AAGA"]);
        let p = a.patterns(2);
        assert_eq!(p.len(), 2);
        assert_eq!(p.site_count(), 4.0);
        assert_eq!(p.counts, vec![3.0, 1.0]);
        assert_eq!(a.patterns(1).len(), 2);
    }

    #[test]
    fn three_sequence_ordering() {
        let a = aln(&["AAAAAAAAAA", "CAAAAAAAAA", "AGGGGGAAAA"]);
        let d = a.distance_matrix();
        assert_eq!((d[0][1], d[0][2]), (1, 5));
        assert_eq!(d[1][2], 6);
        assert_eq!(compute_ordering(&a, OrderingKind::Nearest), vec![0, 1, 2]);
        assert_eq!(compute_ordering(&a, OrderingKind::Furthest), vec![1, 2, 0]);
    }

    #[test]
    fn equal_distances_keep_index_order() {
        let a = aln(&["AAA", "AAA", "AAA", "AAA"]);
        assert_eq!(compute_ordering(&a, OrderingKind::Nearest), vec![0, 1, 2, 3]);
        assert_eq!(compute_ordering(&a, OrderingKind::Furthest), vec![0, 1, 2, 3]);
        assert_eq!(compute_ordering(&aln(&["AC", "GT"]), OrderingKind::Furthest), vec![0, 1]);
    }
}
