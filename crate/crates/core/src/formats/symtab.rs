//! Symbol tables mapping surface tokens to integer ids.
//!
//! Two modes cover the supported corpora: a named table loaded from a
//! "token<TAB>id" file, and a numeric table where tokens already are
//! decimal ids. Both honor the reserved ids 0 (unknown), 1 (begin of
//! sentence) and 2 (end of sentence).

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::vocab::{TokenId, BOS_ID, EOS_ID, UNK_ID};

pub const UNK_NAME: &str = "<unk>";
pub const BOS_NAME: &str = "<s>";
pub const EOS_NAME: &str = "</s>";

enum Mode {
    Numeric,
    Named {
        by_name: HashMap<String, TokenId>,
        by_id: BTreeMap<TokenId, String>,
    },
}

pub struct SymbolTable {
    mode: Mode,
}

impl SymbolTable {
    /// A table where every token is its own decimal id. The reserved
    /// names still resolve to their reserved ids.
    pub fn numeric() -> Self {
        SymbolTable { mode: Mode::Numeric }
    }

    /// Loads a named table from "token<TAB>id" lines (any whitespace
    /// separator is accepted). The reserved names are added when absent;
    /// when present they must carry their reserved ids, and no other
    /// token may claim ids 0 through 2.
    pub fn parse(text: &str) -> Result<Self> {
        let mut by_name: HashMap<String, TokenId> = HashMap::new();
        let mut by_id: BTreeMap<TokenId, String> = BTreeMap::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(Error::parse(
                    lineno,
                    format!("expected \"token id\", found {} fields", fields.len()),
                ));
            }
            let name = fields[0].to_string();
            let id: TokenId = fields[1]
                .parse()
                .map_err(|_| Error::parse(lineno, format!("invalid token id {:?}", fields[1])))?;
            let reserved = reserved_id(&name);
            if let Some(want) = reserved {
                if id != want {
                    return Err(Error::parse(
                        lineno,
                        format!("{name} is reserved for id {want}, found {id}"),
                    ));
                }
            } else if id <= EOS_ID {
                return Err(Error::parse(
                    lineno,
                    format!("id {id} is reserved, cannot assign it to {name:?}"),
                ));
            }
            if by_name.insert(name.clone(), id).is_some() {
                return Err(Error::parse(lineno, format!("duplicate token {name:?}")));
            }
            if by_id.insert(id, name.clone()).is_some() {
                return Err(Error::parse(lineno, format!("duplicate id {id}")));
            }
        }
        for (name, id) in [(UNK_NAME, UNK_ID), (BOS_NAME, BOS_ID), (EOS_NAME, EOS_ID)] {
            by_name.entry(name.to_string()).or_insert(id);
            by_id.entry(id).or_insert_with(|| name.to_string());
        }
        Ok(SymbolTable { mode: Mode::Named { by_name, by_id } })
    }

    /// Resolves a token that must be known, as when reading resource
    /// files whose vocabulary has to match the table.
    pub fn resolve_strict(&self, token: &str) -> Result<TokenId> {
        match &self.mode {
            Mode::Numeric => {
                if let Some(id) = reserved_id(token) {
                    return Ok(id);
                }
                token.parse().map_err(|_| {
                    Error::Validation(format!("token {token:?} is not a numeric id"))
                })
            }
            Mode::Named { by_name, .. } => by_name
                .get(token)
                .copied()
                .ok_or_else(|| Error::Validation(format!("token {token:?} not in symbol table"))),
        }
    }

    /// Resolves a token from user input, mapping anything unknown to the
    /// unknown-word id.
    pub fn resolve_lossy(&self, token: &str) -> TokenId {
        self.resolve_strict(token).unwrap_or(UNK_ID)
    }

    /// Surface form for an id. Ids a named table does not cover fall
    /// back to their decimal form so output writing never fails.
    pub fn name(&self, id: TokenId) -> String {
        match &self.mode {
            Mode::Numeric => id.to_string(),
            Mode::Named { by_id, .. } => {
                by_id.get(&id).cloned().unwrap_or_else(|| id.to_string())
            }
        }
    }

    /// Vocabulary size implied by the table: one past the largest id for
    /// a named table, unbounded for a numeric one.
    pub fn implied_size(&self) -> Option<u32> {
        match &self.mode {
            Mode::Numeric => None,
            Mode::Named { by_id, .. } => by_id.keys().next_back().map(|&id| id + 1),
        }
    }

    /// Canonical "token<TAB>id" rendering in ascending id order. The
    /// numeric table has no file form.
    pub fn serialize(&self) -> Result<String> {
        match &self.mode {
            Mode::Numeric => Err(Error::Usage(
                "a numeric symbol table has no file representation".into(),
            )),
            Mode::Named { by_id, .. } => {
                let mut out = String::new();
                for (id, name) in by_id {
                    writeln!(out, "{name}\t{id}").expect("string write");
                }
                Ok(out)
            }
        }
    }
}

fn reserved_id(name: &str) -> Option<TokenId> {
    match name {
        UNK_NAME => Some(UNK_ID),
        BOS_NAME => Some(BOS_ID),
        EOS_NAME => Some(EOS_ID),
        _ => None,
    }
}
