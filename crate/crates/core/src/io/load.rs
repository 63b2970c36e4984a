use std::fs;
use std::path::Path;

use crate::coalescent::{nucleotide_code, SeqAlignment};
use crate::error::{Error, Result};
use crate::gmm::GmmData;

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

/// Read one real number per line; blank lines and `#` comments are skipped.
pub fn load_observations(path: &Path) -> Result<GmmData> {
    parse_observations(&read(path)?, path)
}

pub fn parse_observations(text: &str, path: &Path) -> Result<GmmData> {
    let mut obs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let y: f64 = line
            .parse()
            .map_err(|_| parse_error(path, i + 1, format!("not a number: `{line}`")))?;
        if !y.is_finite() {
            return Err(parse_error(path, i + 1, format!("non-finite value `{line}`")));
        }
        obs.push(y);
    }
    if obs.is_empty() {
        return Err(parse_error(path, 0, "no observations"));
    }
    GmmData::new(obs).map_err(|e| parse_error(path, 0, e.to_string()))
}

/// Read a FASTA file (first non-blank line starts with `>`) or a relaxed
/// sequential PHYLIP file.
pub fn load_alignment(path: &Path) -> Result<SeqAlignment> {
    parse_alignment(&read(path)?, path)
}

pub fn parse_alignment(text: &str, path: &Path) -> Result<SeqAlignment> {
    let first = text.lines().find(|l| !l.trim().is_empty());
    match first {
        None => Err(parse_error(path, 0, "empty alignment file")),
        Some(l) if l.trim_start().starts_with('>') => parse_fasta(text, path),
        Some(_) => parse_phylip(text, path),
    }
}

/// Append the letters of `chunk` (found on `line`, starting at 1-based
/// column `col0`) to `codes`, skipping whitespace.
fn push_codes(codes: &mut Vec<u8>, chunk: &str, path: &Path, line: usize, col0: usize) -> Result<()> {
    for (j, c) in chunk.chars().enumerate() {
        if c.is_whitespace() {
            continue;
        }
        match nucleotide_code(c) {
            Some(code) => codes.push(code),
            None => {
                return Err(parse_error(
                    path,
                    line,
                    format!("column {}: invalid symbol `{c}` (only A, C, G, T allowed)", col0 + j),
                ))
            }
        }
    }
    Ok(())
}

struct Record {
    name: String,
    line: usize,
    codes: Vec<u8>,
}

fn check_lengths(records: Vec<Record>, path: &Path) -> Result<SeqAlignment> {
    let Some(first) = records.first() else {
        return Err(parse_error(path, 0, "no sequences"));
    };
    for r in &records {
        if r.codes.is_empty() {
            return Err(parse_error(path, r.line, format!("record `{}` is empty", r.name)));
        }
        if r.codes.len() != first.codes.len() {
            return Err(parse_error(
                path,
                r.line,
                format!(
                    "record `{}` has {} sites but record `{}` has {}",
                    r.name,
                    r.codes.len(),
                    first.name,
                    first.codes.len()
                ),
            ));
        }
    }
    let names = records.iter().map(|r| r.name.clone()).collect();
    let seqs = records.into_iter().map(|r| r.codes).collect();
    SeqAlignment::new(names, seqs).map_err(|e| parse_error(path, 0, e.to_string()))
}

fn parse_fasta(text: &str, path: &Path) -> Result<SeqAlignment> {
    let mut records: Vec<Record> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        if let Some(header) = raw.trim_start().strip_prefix('>') {
            let name = header.trim().to_string();
            if name.is_empty() {
                return Err(parse_error(path, line, "record without a name"));
            }
            records.push(Record {
                name,
                line,
                codes: Vec::new(),
            });
        } else if !raw.trim().is_empty() {
            let Some(rec) = records.last_mut() else {
                return Err(parse_error(path, line, "sequence data before the first `>` header"));
            };
            push_codes(&mut rec.codes, raw, path, line, 1)?;
        }
    }
    check_lengths(records, path)
}

fn parse_phylip(text: &str, path: &Path) -> Result<SeqAlignment> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().expect("non-empty text");
    let dims: Vec<&str> = header.split_whitespace().collect();
    let parse_dim = |s: Option<&&str>| s.and_then(|v| v.parse::<usize>().ok());
    let (Some(ntax), Some(nchar)) = (parse_dim(dims.first()), parse_dim(dims.get(1))) else {
        return Err(parse_error(path, hline + 1, "expected `<sequences> <sites>` header"));
    };
    let mut records = Vec::with_capacity(ntax);
    for (i, raw) in lines {
        let line = i + 1;
        let trimmed = raw.trim_start();
        let indent = raw.len() - trimmed.len();
        let name_end = trimmed.find(char::is_whitespace).ok_or_else(|| {
            parse_error(path, line, "expected a name followed by the sequence")
        })?;
        let name = trimmed[..name_end].to_string();
        let mut codes = Vec::with_capacity(nchar);
        let rest = &trimmed[name_end..];
        push_codes(&mut codes, rest, path, line, indent + name_end + 1)?;
        records.push(Record { name, line, codes });
    }
    if records.len() != ntax {
        return Err(parse_error(
            path,
            hline + 1,
            format!("header declares {ntax} sequences, found {}", records.len()),
        ));
    }
    if let Some(r) = records.iter().find(|r| r.codes.len() != nchar) {
        return Err(parse_error(
            path,
            r.line,
            format!("record `{}` has {} sites, header declares {nchar}", r.name, r.codes.len()),
        ));
    }
    check_lengths(records, path)
}
