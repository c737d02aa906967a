//! Synchronized beam search: instead of cutting after every token, run
//! an unconstrained best-first expansion until each hypothesis has just
//! consumed the synchronization symbol (or finished), and apply the
//! beam cutoff to those aligned hypotheses. Useful when single tokens
//! are fragments (characters, subwords) and fair comparison points are
//! coarser units like word boundaries.

use std::collections::BinaryHeap;
use std::rc::Rc;

use crate::decoders::{
    live_expansions, Decoder, DecoderConfig, Open, Prioritized, SearchResult, SearchStats,
};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::hypothesis::{compare_hypotheses, PartialHypothesis};
use crate::vocab::{SourceSentence, TokenId, EOS_ID};

pub struct SyncbeamDecoder {
    config: DecoderConfig,
    sync_symbol: TokenId,
}

impl SyncbeamDecoder {
    pub fn new(config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        let sync_symbol = config.sync_symbol.ok_or_else(|| {
            Error::Config("synchronized beam search needs a synchronization symbol".into())
        })?;
        Ok(SyncbeamDecoder { config, sync_symbol })
    }
}

impl Decoder for SyncbeamDecoder {
    fn name(&self) -> &'static str {
        "syncbeam"
    }

    fn decode(&mut self, ensemble: &mut Ensemble, src: &SourceSentence) -> Result<SearchResult> {
        let max_len = self.config.effective_max_len(src);
        let n = self.config.beam_size;
        let budget = self.config.node_budget;
        let mut stats = SearchStats::default();
        let mut beam = vec![ensemble.start_hypothesis(src)?];

        'rounds: loop {
            match beam.first() {
                None => break,
                Some(best) if best.is_complete() => break,
                Some(_) => {}
            }

            // Complete hypotheses skip the chunk and compete directly at
            // the next cutoff.
            let mut synced: Vec<PartialHypothesis> = Vec::new();
            let mut frontier: BinaryHeap<Prioritized> = BinaryHeap::new();
            for hyp in beam.drain(..) {
                if hyp.is_complete() {
                    synced.push(hyp);
                } else if hyp.len() < max_len {
                    frontier.push(Prioritized { priority: hyp.score, node: Open::Ready(hyp) });
                }
            }

            while let Some(entry) = frontier.pop() {
                // Under nonpositive scores no descendant can outscore
                // its node, so once n synchronized hypotheses beat the
                // whole frontier the chunk is decided. Ties keep
                // exploring so the lexicographic order stays exact.
                if self.config.nonpositive_scores && synced.len() >= n {
                    let kth = nth_best_score(&synced, n);
                    if entry.priority < kth {
                        stats.pruned += frontier.len() as u64 + 1;
                        break;
                    }
                }
                let reached_sync =
                    matches!(&entry.node, Open::Pending { exp, .. }
                        if exp.token == self.sync_symbol || exp.token == EOS_ID);
                let node_len = entry.node.len();
                let hyp = entry.node.materialize(ensemble)?;
                if reached_sync {
                    synced.push(hyp);
                    continue;
                }
                if node_len >= max_len {
                    continue; // chunk depth cap: cannot sync in time
                }
                if let Some(b) = budget {
                    if stats.expansions >= b {
                        stats.truncated = true;
                        break 'rounds;
                    }
                }
                let candidates = live_expansions(ensemble, &hyp)?;
                stats.expansions += 1;
                let parent = Rc::new(hyp);
                for exp in candidates {
                    frontier.push(Prioritized {
                        priority: parent.score + exp.combined + 0.0,
                        node: Open::Pending { parent: parent.clone(), exp },
                    });
                }
            }

            if synced.is_empty() {
                // Every path ran out of length without reaching a
                // synchronization point.
                return Ok(SearchResult { nbest: Vec::new(), stats });
            }
            synced.sort_by(compare_hypotheses);
            stats.pruned += synced.len().saturating_sub(n) as u64;
            synced.truncate(n);
            beam = synced;
        }

        let completes = beam.into_iter().filter(|h| h.is_complete()).collect();
        Ok(SearchResult::from_completes(completes, n, stats))
    }
}

/// Score of the n-th best entry (1-based), assuming `entries.len() >= n`.
fn nth_best_score(entries: &[PartialHypothesis], n: usize) -> f64 {
    let mut scores: Vec<f64> = entries.iter().map(|h| h.score).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    scores[n - 1]
}
