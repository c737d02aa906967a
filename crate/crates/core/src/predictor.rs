//! The scoring-module contract: each predictor scores candidate next
//! tokens given the tokens consumed so far, and exposes its internal
//! state as an opaque snapshot so search strategies can branch and
//! backtrack without the predictor knowing how it is being driven.

use std::any::Any;
use std::fmt;

use crate::error::{Error, Result};
use crate::posterior::Posterior;
use crate::vocab::{SourceSentence, TokenId};

/// Implemented by every concrete predictor state so snapshots can be
/// cloned and downcast behind one object type.
pub trait StatePayload: Any + Send {
    fn clone_payload(&self) -> Box<dyn StatePayload>;
    fn as_any(&self) -> &dyn Any;
}

impl<T: Any + Send + Clone> StatePayload for T {
    fn clone_payload(&self) -> Box<dyn StatePayload> {
        Box::new(self.clone())
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// An opaque value snapshot of one predictor's state. Snapshots have
/// value semantics: restoring one never observes mutations made after
/// it was taken.
pub struct PredictorState(Box<dyn StatePayload>);

impl PredictorState {
    pub fn new<T: StatePayload>(payload: T) -> Self {
        PredictorState(Box::new(payload))
    }

    /// Borrows the concrete state, failing with `StateMismatch` when the
    /// snapshot came from a different predictor type.
    pub fn downcast_ref<T: StatePayload>(&self, expected: &'static str) -> Result<&T> {
        self.0
            .as_any()
            .downcast_ref::<T>()
            .ok_or(Error::StateMismatch { expected })
    }
}

impl Clone for PredictorState {
    fn clone(&self) -> Self {
        PredictorState(self.0.clone_payload())
    }
}

impl fmt::Debug for PredictorState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PredictorState(..)")
    }
}

/// A scoring module. All scores are natural-log domain, higher is better.
///
/// The driving search strategy is the only caller. It may interleave
/// `get_state`/`set_state` arbitrarily between scoring calls; predictors
/// must behave identically whether a state was reached by consuming
/// tokens or by restoring a snapshot.
pub trait Predictor: Send {
    /// Short stable identifier used in diagnostics and score breakdowns.
    fn name(&self) -> &'static str;

    /// Resets the predictor to the start of a new hypothesis for `src`.
    fn initialize(&mut self, src: &SourceSentence) -> Result<()>;

    /// Scores candidate next tokens from the current state. Unlisted
    /// tokens take the posterior's default score.
    ///
    /// A predictor whose state can no longer continue (a hard constraint
    /// that was violated) fails with `DeadHypothesis`.
    fn predict_next(&mut self) -> Result<Posterior>;

    /// Advances the state by one consumed token. Consuming a token the
    /// predictor scored impossible is permitted; the predictor marks the
    /// hypothesis dead and reports it on the next `predict_next`.
    fn consume(&mut self, token: TokenId) -> Result<()>;

    fn get_state(&self) -> PredictorState;

    fn set_state(&mut self, state: &PredictorState) -> Result<()>;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_has_value_semantics() {
        let state = PredictorState::new(vec![1u32, 2, 3]);
        let copy = state.clone();
        drop(state);
        assert_eq!(copy.downcast_ref::<Vec<u32>>("vec").unwrap(), &[1, 2, 3]);
    }

    #[test]
    fn downcast_of_foreign_state_is_state_mismatch() {
        let state = PredictorState::new(7u64);
        let err = state.downcast_ref::<String>("string-state").unwrap_err();
        assert!(matches!(err, Error::StateMismatch { expected: "string-state" }));
    }
}
