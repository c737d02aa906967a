//! Partial and complete hypotheses as carried by search strategies.

use std::cmp::Ordering;

use crate::predictor::PredictorState;
use crate::vocab::{TokenId, BOS_ID, EOS_ID};

/// One predictor's contribution to a single decision: the raw score it
/// assigned and the weight it was combined under.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScorePair {
    pub raw: f64,
    pub weight: f64,
}

impl ScorePair {
    pub fn weighted(&self) -> f64 {
        if self.raw == f64::NEG_INFINITY {
            f64::NEG_INFINITY
        } else {
            self.weight * self.raw + 0.0
        }
    }
}

/// A hypothesis under construction: the token trajectory from the start
/// symbol, its accumulated combined score, per-step per-predictor score
/// breakdown, and the predictor state snapshots needed to extend it.
#[derive(Debug, Clone)]
pub struct PartialHypothesis {
    /// Token trajectory including the leading start symbol and, once
    /// complete, the trailing end symbol.
    pub trajectory: Vec<TokenId>,
    /// Accumulated combined score of every consumed token after the
    /// start symbol.
    pub score: f64,
    /// `breakdown[step][slot]` mirrors the trajectory after the start
    /// symbol; inner order matches the ensemble's slot order.
    pub breakdown: Vec<Vec<ScorePair>>,
    /// One snapshot per ensemble slot, captured after the last consume.
    pub states: Vec<PredictorState>,
    /// When set, only this slot scores and advances for the hypothesis;
    /// the other slots are held frozen.
    pub predictor_filter: Option<usize>,
}

impl PartialHypothesis {
    /// True once the trajectory ends in the end-of-sentence symbol.
    pub fn is_complete(&self) -> bool {
        self.trajectory.last() == Some(&EOS_ID)
    }

    /// Tokens produced after the start symbol, including any trailing
    /// end symbol. This is the length that search depth limits bound.
    pub fn len(&self) -> usize {
        self.trajectory.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The surface output: trajectory without start or end symbols.
    pub fn output_tokens(&self) -> &[TokenId] {
        let mut toks = self.trajectory.as_slice();
        if toks.first() == Some(&BOS_ID) {
            toks = &toks[1..];
        }
        if toks.last() == Some(&EOS_ID) {
            toks = &toks[..toks.len() - 1];
        }
        toks
    }
}

/// Total order used everywhere hypotheses are ranked: score descending,
/// then trajectory lexicographically ascending so equal-scoring
/// hypotheses rank deterministically.
pub fn compare_hypotheses(a: &PartialHypothesis, b: &PartialHypothesis) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then_with(|| a.trajectory.cmp(&b.trajectory))
}
