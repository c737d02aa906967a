//! Back-off n-gram language model predictor over a loaded ARPA model.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formats::arpa::NgramModel;
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, BOS_ID, UNK_ID};

#[derive(Debug, Clone, PartialEq)]
struct NgramState {
    /// Last `order - 1` tokens, oldest first, seeded with bos.
    history: Vec<TokenId>,
}

pub struct NgramPredictor {
    model: Arc<NgramModel>,
    /// Tokens that end at least one stored n-gram; everything else
    /// falls to the unknown-word unigram.
    candidates: BTreeSet<TokenId>,
    /// Unigram score of the unknown word, the score of tokens absent
    /// from the model. A model without an unknown-word unigram is a
    /// closed-vocabulary model: tokens outside it are impossible.
    unk_unigram: f64,
    state: Option<NgramState>,
}

impl NgramPredictor {
    pub fn new(model: Arc<NgramModel>) -> Result<Self> {
        let candidates: BTreeSet<TokenId> = {
            let mut set = BTreeSet::new();
            for t in model.tokens() {
                set.insert(t);
            }
            set
        };
        if candidates.is_empty() {
            return Err(Error::Config("language model has no n-grams".into()));
        }
        let unk_unigram = model.score(&[], UNK_ID).unwrap_or(f64::NEG_INFINITY);
        Ok(NgramPredictor { model, candidates, unk_unigram, state: None })
    }

    fn state(&self) -> Result<&NgramState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Usage("ngram used before initialize".into()))
    }
}

impl Predictor for NgramPredictor {
    fn name(&self) -> &'static str {
        "ngram"
    }

    fn initialize(&mut self, _src: &SourceSentence) -> Result<()> {
        self.state = Some(NgramState { history: vec![BOS_ID] });
        Ok(())
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        let s = self.state()?;
        let mut post = Posterior::with_default(self.unk_unigram);
        for &t in &self.candidates {
            if let Some(score) = self.model.score(&s.history, t) {
                post.insert(t, score);
            }
        }
        Ok(post)
    }

    fn consume(&mut self, token: TokenId) -> Result<()> {
        let keep = self.model.order().saturating_sub(1);
        self.state()?;
        let s = self.state.as_mut().expect("initialized");
        s.history.push(token);
        if s.history.len() > keep {
            s.history.drain(..s.history.len() - keep);
        }
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(self.state.clone())
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        self.state = state.downcast_ref::<Option<NgramState>>("ngram state")?.clone();
        Ok(())
    }
}
