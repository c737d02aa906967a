//! Id-remapping wrapper: relabels an inner predictor's token ids into
//! another symbol space. Scores pass through unchanged; ids absent from
//! the map keep their value.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId};

/// Relabels a posterior's listed tokens. The map must stay injective on
/// the posterior's support; a collision means two inner scores would
/// claim one outer token.
pub fn map_posterior(post: &Posterior, map: &BTreeMap<TokenId, TokenId>) -> Result<Posterior> {
    let mut out = Posterior::with_default(post.default_score());
    for (t, s) in post.entries() {
        let mapped = map.get(&t).copied().unwrap_or(t);
        let dup = out.score(mapped) != out.default_score() || {
            // A default-valued entry is still an entry; probe exactly.
            out.entries().any(|(e, _)| e == mapped)
        };
        if dup {
            return Err(Error::Config(format!(
                "vocabulary map sends two supported tokens to {mapped}"
            )));
        }
        out.insert(mapped, s);
    }
    Ok(out)
}

pub struct MapVocabWrapper {
    inner: Box<dyn Predictor>,
    /// Inner id to outer id.
    map: Arc<BTreeMap<TokenId, TokenId>>,
    /// Outer id to inner id, derived from `map`.
    inverse: BTreeMap<TokenId, TokenId>,
}

impl MapVocabWrapper {
    pub fn new(inner: Box<dyn Predictor>, map: BTreeMap<TokenId, TokenId>) -> Result<Self> {
        let mut inverse = BTreeMap::new();
        for (&from, &to) in &map {
            if inverse.insert(to, from).is_some() {
                return Err(Error::Config(format!(
                    "vocabulary map sends two tokens to {to}"
                )));
            }
        }
        Ok(MapVocabWrapper { inner, map: Arc::new(map), inverse })
    }

    fn to_inner(&self, token: TokenId) -> TokenId {
        self.inverse.get(&token).copied().unwrap_or(token)
    }
}

impl Predictor for MapVocabWrapper {
    fn name(&self) -> &'static str {
        "map_vocab"
    }

    fn initialize(&mut self, src: &SourceSentence) -> Result<()> {
        self.inner.initialize(src)
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        map_posterior(&self.inner.predict_next()?, &self.map)
    }

    fn consume(&mut self, token: TokenId) -> Result<()> {
        self.inner.consume(self.to_inner(token))
    }

    fn get_state(&self) -> PredictorState {
        self.inner.get_state()
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        self.inner.set_state(state)
    }
}
