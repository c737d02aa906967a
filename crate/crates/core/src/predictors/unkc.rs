//! Unknown-word count predictor: models how many unknown tokens a
//! hypothesis should contain as a Poisson distribution whose rate is
//! estimated from the source sentence, and charges the log-probability
//! of the realized count when the hypothesis ends.

use crate::error::{Error, Result};
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, EOS_ID, UNK_ID};

/// Log of the Poisson probability mass at `k` for rate `lambda`:
/// k·ln λ − λ − ln(k!).
pub fn poisson_log_pmf(lambda: f64, k: u64) -> f64 {
    let ln_k_factorial: f64 = (1..=k).map(|i| (i as f64).ln()).sum();
    k as f64 * lambda.ln() - lambda - ln_k_factorial + 0.0
}

#[derive(Debug, Clone, PartialEq)]
struct UnkCountState {
    unk_count: u64,
    lambda: f64,
}

pub struct UnkCountPredictor {
    /// Rate model λ = c0 + c1 · (unknown tokens in the source).
    c0: f64,
    c1: f64,
    state: Option<UnkCountState>,
}

impl UnkCountPredictor {
    pub const DEFAULT_C0: f64 = 0.5;
    pub const DEFAULT_C1: f64 = 1.0;

    pub fn new(c0: f64, c1: f64) -> Self {
        UnkCountPredictor { c0, c1, state: None }
    }

    fn state(&self) -> Result<&UnkCountState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Usage("unkc used before initialize".into()))
    }
}

impl Default for UnkCountPredictor {
    fn default() -> Self {
        Self::new(Self::DEFAULT_C0, Self::DEFAULT_C1)
    }
}

impl Predictor for UnkCountPredictor {
    fn name(&self) -> &'static str {
        "unkc"
    }

    fn initialize(&mut self, src: &SourceSentence) -> Result<()> {
        let lambda = self.c0 + self.c1 * src.unk_count() as f64;
        if lambda <= 0.0 {
            return Err(Error::Config(format!(
                "unkc rate must be positive, got {lambda} (c0={}, c1={}, source unks={})",
                self.c0,
                self.c1,
                src.unk_count()
            )));
        }
        self.state = Some(UnkCountState { unk_count: 0, lambda });
        Ok(())
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        let s = self.state()?;
        let eos = poisson_log_pmf(s.lambda, s.unk_count);
        Ok(Posterior::from_entries([(EOS_ID, eos)], 0.0))
    }

    fn consume(&mut self, token: TokenId) -> Result<()> {
        self.state()?;
        if token == UNK_ID {
            self.state.as_mut().expect("initialized").unk_count += 1;
        }
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(self.state.clone())
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        self.state = state.downcast_ref::<Option<UnkCountState>>("unkc state")?.clone();
        Ok(())
    }
}
