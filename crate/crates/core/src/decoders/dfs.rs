//! Depth-first traversal of the full hypothesis space, backtracking
//! through predictor state snapshots. With nonpositive per-step scores
//! the incumbent complete hypothesis gives an admissible bound: any
//! partial scoring no better than it can be discarded.

use crate::decoders::{
    live_expansions, Decoder, DecoderConfig, SearchResult, SearchStats,
};
use crate::ensemble::{Ensemble, Expansion};
use crate::error::Result;
use crate::hypothesis::{compare_hypotheses, PartialHypothesis};
use crate::vocab::{SourceSentence, EOS_ID};

pub struct DfsDecoder {
    config: DecoderConfig,
}

struct Frame {
    hyp: PartialHypothesis,
    candidates: Vec<Expansion>,
    next: usize,
}

impl DfsDecoder {
    pub fn new(config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        Ok(DfsDecoder { config })
    }
}

impl Decoder for DfsDecoder {
    fn name(&self) -> &'static str {
        "dfs"
    }

    fn decode(&mut self, ensemble: &mut Ensemble, src: &SourceSentence) -> Result<SearchResult> {
        let max_len = self.config.effective_max_len(src);
        let prune = self.config.nonpositive_scores;
        let budget = self.config.node_budget;
        let mut stats = SearchStats::default();
        // Best complete hypotheses so far; completes[0] is the incumbent
        // whose score bounds the pruning.
        let mut completes: Vec<PartialHypothesis> = Vec::new();

        let root = ensemble.start_hypothesis(src)?;
        let mut stack = Vec::new();
        let candidates = live_expansions(ensemble, &root)?;
        stats.expansions += 1;
        stack.push(Frame { hyp: root, candidates, next: 0 });

        'search: while let Some(frame) = stack.last_mut() {
            if frame.next >= frame.candidates.len() {
                stack.pop();
                continue;
            }
            let exp = frame.candidates[frame.next].clone();
            frame.next += 1;

            let child_score = frame.hyp.score + exp.combined + 0.0;
            if prune {
                if let Some(best) = completes.first() {
                    // Remaining steps cannot raise the score, so a
                    // partial at or below the incumbent is hopeless.
                    if child_score <= best.score {
                        stats.pruned += 1;
                        continue;
                    }
                }
            }

            if exp.token == EOS_ID {
                let child = ensemble.advance(&frame.hyp, &exp)?;
                record_complete(&mut completes, child, self.config.beam_size);
                continue;
            }
            // One more token would still have to follow; respect the cap.
            if frame.hyp.len() + 1 >= max_len {
                continue;
            }
            if let Some(b) = budget {
                if stats.expansions >= b {
                    stats.truncated = true;
                    break 'search;
                }
            }
            let child = ensemble.advance(&frame.hyp, &exp)?;
            let candidates = live_expansions(ensemble, &child)?;
            stats.expansions += 1;
            stack.push(Frame { hyp: child, candidates, next: 0 });
        }

        Ok(SearchResult::from_completes(completes, self.config.beam_size, stats))
    }
}

/// Inserts a complete hypothesis into the capped best-first list.
pub(crate) fn record_complete(
    completes: &mut Vec<PartialHypothesis>,
    hyp: PartialHypothesis,
    cap: usize,
) {
    let at = completes
        .binary_search_by(|probe| compare_hypotheses(probe, &hyp))
        .unwrap_or_else(|e| e);
    if at < cap {
        completes.insert(at, hyp);
        completes.truncate(cap);
    }
}
