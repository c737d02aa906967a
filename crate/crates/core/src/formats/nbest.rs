//! N-best lists in the four-field "id ||| tokens ||| features ||| score"
//! line format.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::formats::symtab::SymbolTable;
use crate::vocab::TokenId;

#[derive(Debug, Clone, PartialEq)]
pub struct NbestEntry {
    pub sentence_id: usize,
    pub tokens: Vec<TokenId>,
    /// Named feature scores in file order.
    pub features: Vec<(String, f64)>,
    pub total: f64,
}

/// Entries grouped by sentence: all lines for one sentence id are
/// contiguous, in file order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct NbestList {
    entries: Vec<NbestEntry>,
}

impl NbestList {
    pub fn new(entries: Vec<NbestEntry>) -> Result<Self> {
        check_grouped(&entries)?;
        Ok(NbestList { entries })
    }

    pub fn entries(&self) -> &[NbestEntry] {
        &self.entries
    }

    pub fn for_sentence(&self, id: usize) -> Vec<&NbestEntry> {
        self.entries.iter().filter(|e| e.sentence_id == id).collect()
    }

    pub fn sentence_ids(&self) -> Vec<usize> {
        let mut ids: Vec<usize> = self.entries.iter().map(|e| e.sentence_id).collect();
        ids.dedup();
        ids
    }
}

fn check_grouped(entries: &[NbestEntry]) -> Result<()> {
    let mut seen: Vec<usize> = Vec::new();
    for e in entries {
        if seen.last() == Some(&e.sentence_id) {
            continue;
        }
        if seen.contains(&e.sentence_id) {
            return Err(Error::Validation(format!(
                "entries for sentence {} are not contiguous",
                e.sentence_id
            )));
        }
        seen.push(e.sentence_id);
    }
    Ok(())
}

pub fn parse_nbest(text: &str, symtab: &SymbolTable) -> Result<NbestList> {
    let mut entries = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split("|||").map(str::trim).collect();
        if fields.len() != 4 {
            return Err(Error::parse(
                lineno,
                format!("expected 4 \"|||\"-separated fields, found {}", fields.len()),
            ));
        }
        let sentence_id: usize = fields[0]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid sentence id {:?}", fields[0])))?;
        let tokens: Vec<TokenId> = fields[1]
            .split_whitespace()
            .map(|t| symtab.resolve_strict(t).map_err(|e| Error::parse(lineno, e.to_string())))
            .collect::<Result<_>>()?;
        if tokens.is_empty() {
            return Err(Error::parse(lineno, "empty token sequence"));
        }
        let mut features = Vec::new();
        for chunk in fields[2].split_whitespace() {
            let (name, value) = chunk
                .split_once('=')
                .ok_or_else(|| Error::parse(lineno, format!("feature {chunk:?} lacks '='")))?;
            let value: f64 = value
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid feature value {value:?}")))?;
            features.push((name.to_string(), value));
        }
        let total: f64 = fields[3]
            .parse()
            .map_err(|_| Error::parse(lineno, format!("invalid total score {:?}", fields[3])))?;
        entries.push(NbestEntry { sentence_id, tokens, features, total });
    }
    NbestList::new(entries)
}

/// Canonical rendering with 6-decimal scores.
pub fn serialize_nbest(list: &NbestList, symtab: &SymbolTable) -> String {
    let mut out = String::new();
    for e in list.entries() {
        let toks: Vec<String> = e.tokens.iter().map(|&t| symtab.name(t)).collect();
        let feats: Vec<String> = e
            .features
            .iter()
            .map(|(n, v)| format!("{n}={v:.6}"))
            .collect();
        writeln!(
            out,
            "{} ||| {} ||| {} ||| {:.6}",
            e.sentence_id,
            toks.join(" "),
            feats.join(" "),
            e.total
        )
        .expect("string write");
    }
    out
}
