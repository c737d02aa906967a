//! Plain tokenized text, one sentence per line.

use crate::error::{Error, Result};
use crate::formats::symtab::SymbolTable;
use crate::vocab::{SourceSentence, TokenId};

/// Reads source sentences, mapping unknown tokens to the unknown-word
/// id while keeping the surface forms.
pub fn parse_source_lines(text: &str, symtab: &SymbolTable) -> Result<Vec<SourceSentence>> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let raw: Vec<String> = line.split_whitespace().map(str::to_string).collect();
        if raw.is_empty() {
            return Err(Error::parse(lineno, "empty source sentence"));
        }
        let tokens: Vec<TokenId> = raw.iter().map(|t| symtab.resolve_lossy(t)).collect();
        out.push(
            SourceSentence::with_raw(tokens, raw)
                .map_err(|e| Error::parse(lineno, e.to_string()))?,
        );
    }
    Ok(out)
}

/// One output line: tokens detokenized through the symbol table.
pub fn render_tokens(tokens: &[TokenId], symtab: &SymbolTable) -> String {
    tokens
        .iter()
        .map(|&t| symtab.name(t))
        .collect::<Vec<_>>()
        .join(" ")
}
