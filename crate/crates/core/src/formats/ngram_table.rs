//! Plain n-gram score tables in the "tok1 … tokk : score" line format,
//! as consumed by the n-gram count predictor.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formats::symtab::SymbolTable;
use crate::vocab::TokenId;

pub type NgramScores = BTreeMap<Vec<TokenId>, f64>;

pub fn parse_ngram_table(text: &str, symtab: &SymbolTable) -> Result<NgramScores> {
    let mut table = NgramScores::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (toks, score) = line
            .rsplit_once(':')
            .ok_or_else(|| Error::parse(lineno, "expected \"tokens : score\""))?;
        let key: Vec<TokenId> = toks
            .split_whitespace()
            .map(|t| symtab.resolve_strict(t).map_err(|e| Error::parse(lineno, e.to_string())))
            .collect::<Result<_>>()?;
        if key.is_empty() {
            return Err(Error::parse(lineno, "empty n-gram"));
        }
        let score: f64 = score
            .trim()
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid score {:?}", score.trim())))?;
        if table.insert(key.clone(), score).is_some() {
            log::warn!("line {lineno}: duplicate n-gram {key:?}, keeping the later score");
        }
    }
    Ok(table)
}

/// Canonical rendering: n-grams ascending by ids, 6-decimal scores.
pub fn serialize_ngram_table(table: &NgramScores, symtab: &SymbolTable) -> String {
    let mut out = String::new();
    for (key, score) in table {
        let toks: Vec<String> = key.iter().map(|&t| symtab.name(t)).collect();
        writeln!(out, "{} : {score:.6}", toks.join(" ")).expect("string write");
    }
    out
}
