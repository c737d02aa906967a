//! The per-position score map over candidate next tokens, the linear score
//! combination, and argmax selection.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::vocab::{TokenId, Vocabulary};

/// Scores are natural-log domain, higher is better. `f64::NEG_INFINITY`
/// marks an impossible continuation; `+inf` and `NaN` never appear.
#[derive(Debug, Clone, PartialEq)]
pub struct Posterior {
    entries: BTreeMap<TokenId, f64>,
    default_score: f64,
}

/// Replaces `-0.0` with `+0.0` so score arithmetic cannot introduce two
/// distinct encodings of a zero score.
#[inline]
fn norm(score: f64) -> f64 {
    debug_assert!(!score.is_nan() && score != f64::INFINITY);
    score + 0.0
}

impl Posterior {
    /// An empty posterior whose unlisted tokens all score `default_score`.
    pub fn with_default(default_score: f64) -> Self {
        Posterior {
            entries: BTreeMap::new(),
            default_score: norm(default_score),
        }
    }

    /// A posterior supporting exactly the listed tokens; everything else
    /// is impossible.
    pub fn restrictive() -> Self {
        Self::with_default(f64::NEG_INFINITY)
    }

    pub fn from_entries<I>(entries: I, default_score: f64) -> Self
    where
        I: IntoIterator<Item = (TokenId, f64)>,
    {
        let mut p = Self::with_default(default_score);
        for (t, s) in entries {
            p.insert(t, s);
        }
        p
    }

    pub fn insert(&mut self, token: TokenId, score: f64) {
        self.entries.insert(token, norm(score));
    }

    /// Score of `token`: its entry if present, the default otherwise.
    pub fn score(&self, token: TokenId) -> f64 {
        self.entries
            .get(&token)
            .copied()
            .unwrap_or(self.default_score)
    }

    pub fn default_score(&self) -> f64 {
        self.default_score
    }

    /// Listed tokens in ascending id order.
    pub fn entries(&self) -> impl Iterator<Item = (TokenId, f64)> + '_ {
        self.entries.iter().map(|(&t, &s)| (t, s))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// True when unlisted tokens are impossible, i.e. this posterior acts
    /// as a hard constraint on the search space.
    pub fn is_restrictive(&self) -> bool {
        self.default_score == f64::NEG_INFINITY
    }

    /// Bit-level equality, distinguishing score encodings that `==` merges.
    pub fn bitwise_eq(&self, other: &Posterior) -> bool {
        self.default_score.to_bits() == other.default_score.to_bits()
            && self.entries.len() == other.entries.len()
            && self
                .entries
                .iter()
                .zip(other.entries.iter())
                .all(|((ta, sa), (tb, sb))| ta == tb && sa.to_bits() == sb.to_bits())
    }
}

/// Combines predictor posteriors in a linear model: the output score of a
/// token is the weighted sum of the per-predictor scores, using each
/// posterior's default for tokens it does not list.
///
/// Any posterior that scores a token impossible (`-inf`, whether listed or
/// by a `-inf` default) makes the combined score impossible regardless of
/// its weight, so hard constraints always constrain.
pub fn combine(weighted: &[(&Posterior, f64)]) -> Result<Posterior> {
    if weighted.is_empty() {
        return Err(Error::Usage("combine requires at least one posterior".into()));
    }
    for (_, w) in weighted {
        if !w.is_finite() {
            return Err(Error::Usage(format!("non-finite combination weight {w}")));
        }
    }

    let default_score = if weighted.iter().any(|(p, _)| p.is_restrictive()) {
        f64::NEG_INFINITY
    } else {
        norm(weighted.iter().map(|(p, w)| w * p.default_score()).sum())
    };

    let mut out = Posterior::with_default(default_score);
    let mut support: Vec<TokenId> = weighted
        .iter()
        .flat_map(|(p, _)| p.entries().map(|(t, _)| t))
        .collect();
    support.sort_unstable();
    support.dedup();

    for token in support {
        let mut sum = 0.0;
        let mut impossible = false;
        for (p, w) in weighted {
            let raw = p.score(token);
            if raw == f64::NEG_INFINITY {
                impossible = true;
                break;
            }
            sum += w * raw;
        }
        out.insert(token, if impossible { f64::NEG_INFINITY } else { sum });
    }
    Ok(out)
}

/// Highest-scoring token, ties broken by smallest id. A posterior with a
/// finite default ranges over the whole vocabulary.
pub fn argmax(p: &Posterior, vocab: &Vocabulary) -> Result<(TokenId, f64)> {
    let mut best: Option<(TokenId, f64)> = None;
    let mut consider = |t: TokenId, s: f64| {
        if s > f64::NEG_INFINITY && best.map_or(true, |(_, bs)| s > bs) {
            best = Some((t, s));
        }
    };
    if p.is_restrictive() {
        for (t, s) in p.entries() {
            consider(t, s);
        }
    } else {
        for t in vocab.tokens() {
            consider(t, p.score(t));
        }
    }
    best.ok_or(Error::DeadHypothesis)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(entries: &[(TokenId, f64)], default: f64) -> Posterior {
        Posterior::from_entries(entries.iter().copied(), default)
    }

    #[test]
    fn combine_single_posterior_weight_one_is_identity() {
        let a = p(&[(4, -1.0), (5, -2.0)], f64::NEG_INFINITY);
        let c = combine(&[(&a, 1.0)]).unwrap();
        assert!(c.bitwise_eq(&a));
    }

    #[test]
    fn combine_adds_weighted_scores() {
        let a = p(&[(4, -1.0), (5, -2.0)], f64::NEG_INFINITY);
        let b = p(&[(4, -3.0), (5, -1.0)], f64::NEG_INFINITY);
        let c = combine(&[(&a, 1.0), (&b, 1.0)]).unwrap();
        assert_eq!(c.score(4), -4.0);
        assert_eq!(c.score(5), -3.0);
        assert!(c.is_restrictive());
    }

    #[test]
    fn combine_halved_weights_preserves_argmax() {
        let a = p(&[(4, -2.0), (5, -1.0), (7, -3.0)], f64::NEG_INFINITY);
        let vocab = Vocabulary::new(8).unwrap();
        let full = argmax(&combine(&[(&a, 1.0)]).unwrap(), &vocab).unwrap();
        let halves = argmax(&combine(&[(&a, 0.5), (&a, 0.5)]).unwrap(), &vocab).unwrap();
        assert_eq!(full.0, halves.0);
    }

    #[test]
    fn combine_restricts_support_to_hard_constraints() {
        let hard = p(&[(4, 0.0)], f64::NEG_INFINITY);
        let soft = p(&[(2, 0.0)], 1.0); // full support
        let c = combine(&[(&hard, 1.0), (&soft, 1.0)]).unwrap();
        assert_eq!(c.score(4), 1.0);
        assert_eq!(c.score(5), f64::NEG_INFINITY);
        assert_eq!(c.score(2), f64::NEG_INFINITY); // eos not in the hard support
    }

    #[test]
    fn combine_empty_input_is_usage_error() {
        assert!(matches!(combine(&[]), Err(Error::Usage(_))));
    }

    #[test]
    fn combine_never_produces_negative_zero() {
        let a = p(&[(4, 0.0)], f64::NEG_INFINITY);
        let c = combine(&[(&a, -1.0)]).unwrap();
        assert_eq!(c.score(4).to_bits(), 0.0f64.to_bits());
    }

    #[test]
    fn argmax_breaks_ties_by_smallest_id() {
        let vocab = Vocabulary::new(8).unwrap();
        let a = p(&[(4, -1.0), (5, -1.0)], f64::NEG_INFINITY);
        assert_eq!(argmax(&a, &vocab).unwrap(), (4, -1.0));
        let b = p(&[(2, 0.0)], f64::NEG_INFINITY);
        assert_eq!(argmax(&b, &vocab).unwrap(), (2, 0.0));
        let c = p(&[(4, -2.0), (5, -1.0), (7, -3.0)], f64::NEG_INFINITY);
        assert_eq!(argmax(&c, &vocab).unwrap(), (5, -1.0));
    }

    #[test]
    fn argmax_with_finite_default_ranges_over_vocabulary() {
        let vocab = Vocabulary::new(6).unwrap();
        // wc-shaped posterior: everything 1.0 except eos.
        let a = p(&[(2, 0.0)], 1.0);
        assert_eq!(argmax(&a, &vocab).unwrap(), (0, 1.0));
    }

    #[test]
    fn argmax_of_all_impossible_is_dead_hypothesis() {
        let vocab = Vocabulary::new(8).unwrap();
        let a = p(&[(4, f64::NEG_INFINITY)], f64::NEG_INFINITY);
        assert!(matches!(argmax(&a, &vocab), Err(Error::DeadHypothesis)));
    }
}
