//! Word-count predictor: a constant raw score of 1.0 per non-final
//! token, so a negative weight penalizes (and a positive weight rewards)
//! hypothesis length.

use crate::error::Result;
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, EOS_ID};

pub struct WordCountPredictor;

impl WordCountPredictor {
    pub fn new() -> Self {
        WordCountPredictor
    }
}

impl Default for WordCountPredictor {
    fn default() -> Self {
        Self::new()
    }
}

impl Predictor for WordCountPredictor {
    fn name(&self) -> &'static str {
        "wc"
    }

    fn initialize(&mut self, _src: &SourceSentence) -> Result<()> {
        Ok(())
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        Ok(Posterior::from_entries([(EOS_ID, 0.0)], 1.0))
    }

    fn consume(&mut self, _token: TokenId) -> Result<()> {
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(())
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        state.downcast_ref::<()>("wc state")?;
        Ok(())
    }
}
