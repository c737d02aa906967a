//! Forced decoding: constrains the search to one reference sequence per
//! sentence. Surviving hypotheses score 0.0 from this predictor.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, EOS_ID};

#[derive(Debug, Clone, PartialEq)]
struct ForcedState {
    sentence: usize,
    position: usize,
    dead: bool,
}

pub struct ForcedPredictor {
    /// One reference per sentence id, each ending with eos.
    references: Arc<Vec<Vec<TokenId>>>,
    state: Option<ForcedState>,
}

impl ForcedPredictor {
    pub fn new(references: Vec<Vec<TokenId>>) -> Result<Self> {
        for (i, r) in references.iter().enumerate() {
            if r.last() != Some(&EOS_ID) {
                return Err(Error::Config(format!(
                    "reference {i} does not end with eos"
                )));
            }
        }
        Ok(ForcedPredictor { references: Arc::new(references), state: None })
    }

    fn state(&self) -> Result<&ForcedState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Usage("forced used before initialize".into()))
    }

    fn reference(&self, state: &ForcedState) -> &[TokenId] {
        &self.references[state.sentence]
    }
}

impl Predictor for ForcedPredictor {
    fn name(&self) -> &'static str {
        "forced"
    }

    fn initialize(&mut self, src: &SourceSentence) -> Result<()> {
        if src.id() >= self.references.len() {
            return Err(Error::Config(format!(
                "no reference for sentence {} ({} loaded)",
                src.id(),
                self.references.len()
            )));
        }
        self.state = Some(ForcedState { sentence: src.id(), position: 0, dead: false });
        Ok(())
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        let s = self.state()?;
        if s.dead {
            return Err(Error::DeadHypothesis);
        }
        match self.reference(s).get(s.position) {
            Some(&next) => Ok(Posterior::from_entries([(next, 0.0)], f64::NEG_INFINITY)),
            None => Err(Error::DeadHypothesis),
        }
    }

    fn consume(&mut self, token: TokenId) -> Result<()> {
        let s = self.state()?.clone();
        let on_reference = self.reference(&s).get(s.position) == Some(&token);
        let s = self.state.as_mut().expect("initialized");
        if on_reference {
            s.position += 1;
        } else {
            s.dead = true;
        }
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(self.state.clone())
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        self.state = state.downcast_ref::<Option<ForcedState>>("forced state")?.clone();
        Ok(())
    }
}
