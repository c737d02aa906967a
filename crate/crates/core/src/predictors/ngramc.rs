//! External n-gram score predictor: adds a fixed score whenever a listed
//! n-gram is completed. All orders that match the current history are
//! summed; tokens matching no entry are neutral.

use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formats::ngram_table::NgramScores;
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId};

#[derive(Debug, Clone, PartialEq)]
struct NgramCountState {
    /// Last `max_order - 1` consumed tokens, oldest first.
    history: Vec<TokenId>,
}

pub struct NgramCountPredictor {
    table: Arc<NgramScores>,
    /// Tokens that end at least one table entry; only these can score.
    candidates: BTreeSet<TokenId>,
    max_order: usize,
    state: Option<NgramCountState>,
}

impl NgramCountPredictor {
    pub fn new(table: NgramScores) -> Self {
        let candidates = table.keys().filter_map(|k| k.last().copied()).collect();
        let max_order = table.keys().map(|k| k.len()).max().unwrap_or(1);
        NgramCountPredictor {
            table: Arc::new(table),
            candidates,
            max_order,
            state: None,
        }
    }

    fn state(&self) -> Result<&NgramCountState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Usage("ngramc used before initialize".into()))
    }

    /// Sum of entry scores over every order whose history suffix plus
    /// `token` is in the table.
    fn matched_sum(&self, history: &[TokenId], token: TokenId) -> Option<f64> {
        let mut sum = 0.0;
        let mut any = false;
        for k in 1..=self.max_order {
            if k - 1 > history.len() {
                break;
            }
            let mut key = history[history.len() - (k - 1)..].to_vec();
            key.push(token);
            if let Some(&s) = self.table.get(&key) {
                sum += s;
                any = true;
            }
        }
        any.then_some(sum + 0.0)
    }
}

impl Predictor for NgramCountPredictor {
    fn name(&self) -> &'static str {
        "ngramc"
    }

    fn initialize(&mut self, _src: &SourceSentence) -> Result<()> {
        self.state = Some(NgramCountState { history: Vec::new() });
        Ok(())
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        let s = self.state()?;
        let mut post = Posterior::with_default(0.0);
        for &t in &self.candidates {
            if let Some(score) = self.matched_sum(&s.history, t) {
                post.insert(t, score);
            }
        }
        Ok(post)
    }

    fn consume(&mut self, token: TokenId) -> Result<()> {
        let max_order = self.max_order;
        self.state()?;
        let s = self.state.as_mut().expect("initialized");
        s.history.push(token);
        let keep = max_order.saturating_sub(1);
        if s.history.len() > keep {
            s.history.drain(..s.history.len() - keep);
        }
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(self.state.clone())
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        self.state = state.downcast_ref::<Option<NgramCountState>>("ngramc state")?.clone();
        Ok(())
    }
}
