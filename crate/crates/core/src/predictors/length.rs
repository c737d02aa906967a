//! Target length predictor: scores ending the hypothesis with the
//! Gaussian log-density of its current length, where the mean is an
//! affine function of the source length.

use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, EOS_ID};

/// Log-density of Normal(mu, sigma) at `x`.
pub fn normal_log_pdf(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - (sigma * TAU.sqrt()).ln() + 0.0
}

#[derive(Debug, Clone, PartialEq)]
struct LengthState {
    mu: f64,
    len: u64,
}

pub struct LengthPredictor {
    a: f64,
    b: f64,
    sigma: f64,
    state: Option<LengthState>,
}

impl LengthPredictor {
    pub const DEFAULT_A: f64 = 1.0;
    pub const DEFAULT_B: f64 = 0.0;
    pub const DEFAULT_SIGMA: f64 = 1.0;

    pub fn new(a: f64, b: f64, sigma: f64) -> Result<Self> {
        if sigma <= 0.0 || !sigma.is_finite() {
            return Err(Error::Config(format!(
                "length model needs a positive standard deviation, got {sigma}"
            )));
        }
        Ok(LengthPredictor { a, b, sigma, state: None })
    }

    fn state(&self) -> Result<&LengthState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Usage("length used before initialize".into()))
    }
}

impl Predictor for LengthPredictor {
    fn name(&self) -> &'static str {
        "length"
    }

    fn initialize(&mut self, src: &SourceSentence) -> Result<()> {
        let mu = self.a * src.len() as f64 + self.b;
        self.state = Some(LengthState { mu, len: 0 });
        Ok(())
    }

    /// Ending now yields a sentence of the current length, so the eos
    /// score is the length model's log-density at that length.
    fn predict_next(&mut self) -> Result<Posterior> {
        let s = self.state()?;
        let eos = normal_log_pdf(s.len as f64, s.mu, self.sigma);
        Ok(Posterior::from_entries([(EOS_ID, eos)], 0.0))
    }

    fn consume(&mut self, _token: TokenId) -> Result<()> {
        self.state()?;
        self.state.as_mut().expect("initialized").len += 1;
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(self.state.clone())
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        self.state = state.downcast_ref::<Option<LengthState>>("length state")?.clone();
        Ok(())
    }
}
