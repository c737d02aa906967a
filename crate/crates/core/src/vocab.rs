//! Token ids, reserved sentinels, and source sentences.

use crate::error::{Error, Result};

/// Tokens are plain integer ids; all scoring happens over ids.
pub type TokenId = u32;

/// Reserved id for out-of-vocabulary tokens.
pub const UNK_ID: TokenId = 0;
/// Reserved id for the begin-of-sentence sentinel.
pub const BOS_ID: TokenId = 1;
/// Reserved id for the end-of-sentence sentinel.
pub const EOS_ID: TokenId = 2;

/// A vocabulary is a contiguous id range `0..size` with the three reserved
/// sentinels at fixed positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Vocabulary {
    size: u32,
}

impl Vocabulary {
    /// Requires `size >= 3` so the reserved ids fit.
    pub fn new(size: u32) -> Result<Self> {
        if size <= EOS_ID {
            return Err(Error::Config(format!(
                "vocabulary size must be at least {}, got {size}",
                EOS_ID + 1
            )));
        }
        Ok(Vocabulary { size })
    }

    pub fn size(&self) -> u32 {
        self.size
    }

    pub fn contains(&self, token: TokenId) -> bool {
        token < self.size
    }

    /// All token ids, ascending.
    pub fn tokens(&self) -> impl Iterator<Item = TokenId> {
        0..self.size
    }
}

/// A tokenized input sentence plus the original surface strings.
///
/// The surface strings are kept for predictors that extract features from
/// the raw input (e.g. counting tokens mapped to `UNK_ID`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSentence {
    tokens: Vec<TokenId>,
    raw: Vec<String>,
    /// Zero-based corpus position, used by predictors that carry one
    /// resource per sentence (references, n-best lists, bags).
    id: usize,
}

impl SourceSentence {
    /// Builds a sentence whose surface form is the decimal ids themselves.
    pub fn new(tokens: Vec<TokenId>) -> Result<Self> {
        let raw = tokens.iter().map(|t| t.to_string()).collect();
        Self::with_raw(tokens, raw)
    }

    pub fn with_raw(tokens: Vec<TokenId>, raw: Vec<String>) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::Validation("source sentence is empty".into()));
        }
        if tokens.len() != raw.len() {
            return Err(Error::Validation(format!(
                "source sentence has {} token ids but {} surface tokens",
                tokens.len(),
                raw.len()
            )));
        }
        if let Some(t) = tokens.iter().find(|&&t| t == BOS_ID || t == EOS_ID) {
            return Err(Error::Validation(format!(
                "source sentence contains reserved sentinel {t}"
            )));
        }
        Ok(SourceSentence { tokens, raw, id: 0 })
    }

    pub fn with_id(mut self, id: usize) -> Self {
        self.id = id;
        self
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn raw(&self) -> &[String] {
        &self.raw
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false // enforced non-empty at construction
    }

    /// Number of source tokens mapped to the unknown id.
    pub fn unk_count(&self) -> usize {
        self.tokens.iter().filter(|&&t| t == UNK_ID).count()
    }
}
