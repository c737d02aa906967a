//! ARPA back-off n-gram language models.
//!
//! Files store log10 probabilities; the in-memory model keeps natural
//! logs so all scoring stays in one log domain. Back-off follows the
//! standard rule: an unseen n-gram falls back to the (n-1)-gram score
//! plus the history's back-off weight, a missing back-off weight counts
//! as zero.

use std::collections::BTreeMap;
use std::f64::consts::LN_10;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formats::symtab::SymbolTable;
use crate::vocab::TokenId;

#[derive(Debug, Clone, Copy, PartialEq)]
struct NgramEntry {
    /// Natural-log probability of the n-gram.
    logprob: f64,
    /// Natural-log back-off weight used when extending this n-gram as a
    /// history fails.
    backoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NgramModel {
    /// `tables[n-1]` maps n-grams (oldest token first) to their entry.
    tables: Vec<BTreeMap<Vec<TokenId>, NgramEntry>>,
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.tables.len()
    }

    /// Natural-log probability of `token` after `history`, using at most
    /// `order - 1` trailing history tokens. `None` when even the unigram
    /// is unknown to the model.
    pub fn score(&self, history: &[TokenId], token: TokenId) -> Option<f64> {
        let keep = history.len().min(self.order().saturating_sub(1));
        self.score_backoff(&history[history.len() - keep..], token)
    }

    fn score_backoff(&self, history: &[TokenId], token: TokenId) -> Option<f64> {
        let mut key = history.to_vec();
        key.push(token);
        if let Some(e) = self.tables[key.len() - 1].get(&key) {
            return Some(e.logprob);
        }
        if history.is_empty() {
            return None;
        }
        let bow = self.tables[history.len() - 1]
            .get(history)
            .map_or(0.0, |e| e.backoff);
        self.score_backoff(&history[1..], token)
            .map(|p| bow + p + 0.0)
    }

    /// All tokens appearing in any n-gram, for vocabulary inference.
    pub fn tokens(&self) -> impl Iterator<Item = TokenId> + '_ {
        self.tables
            .iter()
            .flat_map(|t| t.keys().flat_map(|k| k.iter().copied()))
    }
}

enum Section {
    Preamble,
    Counts,
    Grams(usize),
    Done,
}

pub fn parse_arpa(text: &str, symtab: &SymbolTable) -> Result<NgramModel> {
    let mut section = Section::Preamble;
    let mut counts: Vec<usize> = Vec::new();
    let mut tables: Vec<BTreeMap<Vec<TokenId>, NgramEntry>> = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        match section {
            Section::Preamble => {
                if line == "\\data\\" {
                    section = Section::Counts;
                } else {
                    return Err(Error::parse(lineno, "expected \\data\\ header"));
                }
            }
            Section::Counts => {
                if let Some(rest) = line.strip_prefix("ngram ") {
                    let (n, count) = rest.split_once('=').ok_or_else(|| {
                        Error::parse(lineno, "expected \"ngram N=count\"")
                    })?;
                    let n: usize = n
                        .trim()
                        .parse()
                        .map_err(|_| Error::parse(lineno, format!("invalid order {n:?}")))?;
                    if n != counts.len() + 1 {
                        return Err(Error::parse(
                            lineno,
                            format!("orders must be declared consecutively from 1, found {n}"),
                        ));
                    }
                    let count: usize = count.trim().parse().map_err(|_| {
                        Error::parse(lineno, format!("invalid count {count:?}"))
                    })?;
                    counts.push(count);
                } else {
                    if counts.is_empty() {
                        return Err(Error::parse(lineno, "no n-gram orders declared"));
                    }
                    tables = vec![BTreeMap::new(); counts.len()];
                    section = next_section(line, lineno, counts.len())?;
                }
            }
            Section::Grams(n) => {
                if line.starts_with('\\') {
                    section = next_section(line, lineno, counts.len())?;
                } else {
                    let (key, entry) = parse_gram_line(line, lineno, n, symtab)?;
                    if tables[n - 1].insert(key, entry).is_some() {
                        return Err(Error::parse(lineno, "duplicate n-gram"));
                    }
                }
            }
            Section::Done => {
                return Err(Error::parse(lineno, "content after \\end\\"));
            }
        }
    }
    if !matches!(section, Section::Done) {
        return Err(Error::parse(text.lines().count().max(1), "missing \\end\\"));
    }
    for (i, (&count, table)) in counts.iter().zip(&tables).enumerate() {
        if count != table.len() {
            return Err(Error::Validation(format!(
                "\\data\\ declares {} {}-grams but the section lists {}",
                count,
                i + 1,
                table.len()
            )));
        }
    }
    Ok(NgramModel { tables })
}

fn next_section(line: &str, lineno: usize, order: usize) -> Result<Section> {
    if line == "\\end\\" {
        return Ok(Section::Done);
    }
    let n = line
        .strip_prefix('\\')
        .and_then(|l| l.strip_suffix("-grams:"))
        .and_then(|n| n.parse::<usize>().ok())
        .ok_or_else(|| Error::parse(lineno, format!("unrecognized section header {line:?}")))?;
    if n == 0 || n > order {
        return Err(Error::parse(
            lineno,
            format!("section order {n} was not declared in \\data\\"),
        ));
    }
    Ok(Section::Grams(n))
}

fn parse_gram_line(
    line: &str,
    lineno: usize,
    n: usize,
    symtab: &SymbolTable,
) -> Result<(Vec<TokenId>, NgramEntry)> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != n + 1 && fields.len() != n + 2 {
        return Err(Error::parse(
            lineno,
            format!("expected {} or {} fields for a {n}-gram, found {}", n + 1, n + 2, fields.len()),
        ));
    }
    let logprob = parse_log10(fields[0], lineno)?;
    let mut key = Vec::with_capacity(n);
    for tok in &fields[1..=n] {
        key.push(symtab.resolve_strict(tok).map_err(|e| {
            Error::parse(lineno, e.to_string())
        })?);
    }
    let backoff = match fields.get(n + 1) {
        Some(f) => parse_log10(f, lineno)?,
        None => 0.0,
    };
    Ok((key, NgramEntry { logprob, backoff }))
}

fn parse_log10(field: &str, lineno: usize) -> Result<f64> {
    let v: f64 = field
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid log probability {field:?}")))?;
    if !v.is_finite() {
        return Err(Error::parse(lineno, format!("log probability {field:?} is not finite")));
    }
    Ok(v * LN_10 + 0.0)
}

/// Canonical ARPA rendering: 6-decimal log10 values, n-grams ascending
/// by token ids, back-off omitted when zero.
pub fn serialize_arpa(model: &NgramModel, symtab: &SymbolTable) -> String {
    let mut out = String::from("\\data\\\n");
    for (i, table) in model.tables.iter().enumerate() {
        writeln!(out, "ngram {}={}", i + 1, table.len()).expect("string write");
    }
    for (i, table) in model.tables.iter().enumerate() {
        writeln!(out, "\n\\{}-grams:", i + 1).expect("string write");
        for (key, entry) in table {
            let toks: Vec<String> = key.iter().map(|&t| symtab.name(t)).collect();
            write!(out, "{:.6}\t{}", entry.logprob / LN_10, toks.join(" ")).expect("string write");
            if entry.backoff != 0.0 {
                write!(out, "\t{:.6}", entry.backoff / LN_10).expect("string write");
            }
            out.push('\n');
        }
    }
    out.push_str("\n\\end\\\n");
    out
}
