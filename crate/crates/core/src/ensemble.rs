//! The linear-model ensemble: a weighted list of predictors driven in
//! lockstep, plus the hypothesis-level expand/advance operations search
//! strategies are written against.

use crate::error::{Error, Result};
use crate::hypothesis::{PartialHypothesis, ScorePair};
use crate::posterior::{combine, Posterior};
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, Vocabulary, BOS_ID};

/// One weighted predictor in the ensemble.
pub struct Slot {
    pub predictor: Box<dyn Predictor>,
    pub weight: f64,
}

/// A candidate one-token extension of a hypothesis.
#[derive(Debug, Clone)]
pub struct Expansion {
    pub token: TokenId,
    /// Weighted sum of the per-slot raw scores for `token`.
    pub combined: f64,
    /// One entry per ensemble slot. Slots frozen by a hypothesis filter
    /// contribute a zero pair.
    pub raw: Vec<ScorePair>,
}

pub struct Ensemble {
    slots: Vec<Slot>,
    vocab: Vocabulary,
}

impl Ensemble {
    pub fn new(slots: Vec<Slot>, vocab: Vocabulary) -> Result<Self> {
        if slots.is_empty() {
            return Err(Error::Usage("an ensemble needs at least one predictor".into()));
        }
        for slot in &slots {
            if !slot.weight.is_finite() {
                return Err(Error::Usage(format!(
                    "non-finite weight {} for predictor {}",
                    slot.weight,
                    slot.predictor.name()
                )));
            }
        }
        Ok(Ensemble { slots, vocab })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    pub fn slot_names(&self) -> Vec<&'static str> {
        self.slots.iter().map(|s| s.predictor.name()).collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        self.slots.iter().map(|s| s.weight).collect()
    }

    pub fn initialize(&mut self, src: &SourceSentence) -> Result<()> {
        for slot in &mut self.slots {
            slot.predictor.initialize(src)?;
        }
        Ok(())
    }

    pub fn capture_states(&self) -> Vec<PredictorState> {
        self.slots.iter().map(|s| s.predictor.get_state()).collect()
    }

    pub fn restore_states(&mut self, states: &[PredictorState]) -> Result<()> {
        if states.len() != self.slots.len() {
            return Err(Error::Usage(format!(
                "state snapshot has {} entries for {} predictors",
                states.len(),
                self.slots.len()
            )));
        }
        for (slot, state) in self.slots.iter_mut().zip(states) {
            slot.predictor.set_state(state)?;
        }
        Ok(())
    }

    /// Scores candidate next tokens from the predictors' current states.
    /// Returns the combined posterior and the per-slot raw posteriors.
    pub fn predict(&mut self) -> Result<(Posterior, Vec<Posterior>)> {
        let mut raws = Vec::with_capacity(self.slots.len());
        for slot in &mut self.slots {
            raws.push(slot.predictor.predict_next()?);
        }
        let weighted: Vec<(&Posterior, f64)> = raws
            .iter()
            .zip(&self.slots)
            .map(|(p, s)| (p, s.weight))
            .collect();
        let combined = combine(&weighted)?;
        Ok((combined, raws))
    }

    pub fn consume(&mut self, token: TokenId) -> Result<()> {
        self.validate_token(token)?;
        for slot in &mut self.slots {
            slot.predictor.consume(token)?;
        }
        Ok(())
    }

    /// A fresh hypothesis at the start symbol, with all predictors
    /// initialized for `src`.
    pub fn start_hypothesis(&mut self, src: &SourceSentence) -> Result<PartialHypothesis> {
        self.initialize(src)?;
        Ok(PartialHypothesis {
            trajectory: vec![BOS_ID],
            score: 0.0,
            breakdown: Vec::new(),
            states: self.capture_states(),
            predictor_filter: None,
        })
    }

    /// All scoreable one-token extensions of `hyp`, sorted by combined
    /// score descending then token id ascending. Tokens any predictor
    /// scores impossible are omitted; an empty result means the
    /// hypothesis cannot be continued.
    ///
    /// Fails with `DeadHypothesis` when a constraint predictor has
    /// already been violated on this trajectory.
    pub fn expand(&mut self, hyp: &PartialHypothesis) -> Result<Vec<Expansion>> {
        let active = self.active_flags(hyp)?;

        let mut raws: Vec<Option<Posterior>> = Vec::with_capacity(self.slots.len());
        for (i, slot) in self.slots.iter_mut().enumerate() {
            if active[i] {
                slot.predictor.set_state(&hyp.states[i])?;
                raws.push(Some(slot.predictor.predict_next()?));
            } else {
                raws.push(None);
            }
        }
        let weighted: Vec<(&Posterior, f64)> = raws
            .iter()
            .zip(&self.slots)
            .filter_map(|(p, s)| p.as_ref().map(|p| (p, s.weight)))
            .collect();
        let combined = combine(&weighted)?;

        let mut out = Vec::new();
        let mut push = |token: TokenId, score: f64| -> Result<()> {
            if score == f64::NEG_INFINITY {
                return Ok(());
            }
            if !self.vocab.contains(token) {
                return Err(Error::Validation(format!(
                    "predictor proposed token {token} outside vocabulary of size {}",
                    self.vocab.size()
                )));
            }
            let raw = raws
                .iter()
                .zip(&self.slots)
                .map(|(p, s)| match p {
                    Some(p) => ScorePair { raw: p.score(token), weight: s.weight },
                    None => ScorePair { raw: 0.0, weight: 0.0 },
                })
                .collect();
            out.push(Expansion { token, combined: score, raw });
            Ok(())
        };
        if combined.is_restrictive() {
            for (t, s) in combined.entries() {
                push(t, s)?;
            }
        } else {
            for t in self.vocab.tokens() {
                push(t, combined.score(t))?;
            }
        }
        out.sort_by(|a, b| b.combined.total_cmp(&a.combined).then(a.token.cmp(&b.token)));
        Ok(out)
    }

    /// Extends `hyp` by a previously returned expansion, producing the
    /// child hypothesis with fresh state snapshots. The parent is left
    /// usable; snapshots are value copies.
    pub fn advance(&mut self, hyp: &PartialHypothesis, exp: &Expansion) -> Result<PartialHypothesis> {
        let active = self.active_flags(hyp)?;
        self.validate_token(exp.token)?;

        let mut states = Vec::with_capacity(self.slots.len());
        for (i, slot) in self.slots.iter_mut().enumerate() {
            if active[i] {
                slot.predictor.set_state(&hyp.states[i])?;
                slot.predictor.consume(exp.token)?;
                states.push(slot.predictor.get_state());
            } else {
                states.push(hyp.states[i].clone());
            }
        }

        let mut trajectory = hyp.trajectory.clone();
        trajectory.push(exp.token);
        let mut breakdown = hyp.breakdown.clone();
        breakdown.push(exp.raw.clone());
        Ok(PartialHypothesis {
            trajectory,
            score: hyp.score + exp.combined + 0.0,
            breakdown,
            states,
            predictor_filter: hyp.predictor_filter.clone(),
        })
    }

    /// Replays a decoded trajectory from a fresh initialization and
    /// returns the recomputed combined score. `filter` mirrors the
    /// hypothesis's predictor filter; `None` scores with every slot.
    pub fn score_trajectory(
        &mut self,
        src: &SourceSentence,
        trajectory: &[TokenId],
        filter: Option<usize>,
    ) -> Result<f64> {
        if trajectory.first() != Some(&BOS_ID) {
            return Err(Error::Usage("a trajectory must begin at the start symbol".into()));
        }
        self.initialize(src)?;
        let active = self.flags_for(filter)?;
        let mut total = 0.0;
        for &token in &trajectory[1..] {
            self.validate_token(token)?;
            let mut raws: Vec<Option<Posterior>> = Vec::with_capacity(self.slots.len());
            for (i, slot) in self.slots.iter_mut().enumerate() {
                if active[i] {
                    raws.push(Some(slot.predictor.predict_next()?));
                } else {
                    raws.push(None);
                }
            }
            let weighted: Vec<(&Posterior, f64)> = raws
                .iter()
                .zip(&self.slots)
                .filter_map(|(p, s)| p.as_ref().map(|p| (p, s.weight)))
                .collect();
            let step = combine(&weighted)?.score(token);
            if step == f64::NEG_INFINITY {
                return Ok(f64::NEG_INFINITY);
            }
            total += step + 0.0;
            for (i, slot) in self.slots.iter_mut().enumerate() {
                if active[i] {
                    slot.predictor.consume(token)?;
                }
            }
        }
        Ok(total)
    }

    fn active_flags(&self, hyp: &PartialHypothesis) -> Result<Vec<bool>> {
        if hyp.states.len() != self.slots.len() {
            return Err(Error::Usage(format!(
                "hypothesis carries {} states for {} predictors",
                hyp.states.len(),
                self.slots.len()
            )));
        }
        self.flags_for(hyp.predictor_filter)
    }

    fn flags_for(&self, filter: Option<usize>) -> Result<Vec<bool>> {
        match filter {
            None => Ok(vec![true; self.slots.len()]),
            Some(slot) => {
                if slot >= self.slots.len() {
                    return Err(Error::Usage(format!(
                        "predictor filter names slot {slot} of {}",
                        self.slots.len()
                    )));
                }
                let mut flags = vec![false; self.slots.len()];
                flags[slot] = true;
                Ok(flags)
            }
        }
    }

    fn validate_token(&self, token: TokenId) -> Result<()> {
        if !self.vocab.contains(token) {
            return Err(Error::Validation(format!(
                "token {token} outside vocabulary of size {}",
                self.vocab.size()
            )));
        }
        Ok(())
    }
}
