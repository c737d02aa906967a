//! Bucket search: a quick small-beam pass produces an incumbent, while
//! every candidate the cutoffs rejected is kept, grouped by hypothesis
//! length and ordered by score. Those deferred nodes are then re-expanded
//! best first, sharpening the incumbent; under nonpositive scores every
//! node at or below the incumbent is discarded risk-free, so an
//! unlimited budget drains the space to the global optimum.

use std::collections::BinaryHeap;
use std::rc::Rc;

use crate::decoders::beam::beam_loop;
use crate::decoders::dfs::record_complete;
use crate::decoders::{
    live_expansions, Decoder, DecoderConfig, Open, Prioritized, SearchResult, SearchStats,
};
use crate::ensemble::Ensemble;
use crate::error::Result;
use crate::hypothesis::PartialHypothesis;
use crate::vocab::{SourceSentence, EOS_ID};

pub struct BucketDecoder {
    config: DecoderConfig,
}

impl BucketDecoder {
    pub fn new(config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        Ok(BucketDecoder { config })
    }
}

impl Decoder for BucketDecoder {
    fn name(&self) -> &'static str {
        "bucket"
    }

    fn decode(&mut self, ensemble: &mut Ensemble, src: &SourceSentence) -> Result<SearchResult> {
        let max_len = self.config.effective_max_len(src);
        let n = self.config.beam_size;
        let prune = self.config.nonpositive_scores;
        let budget = self.config.node_budget;

        // The first pass always runs to completion; the budget governs
        // how much re-expansion follows it.
        let mut open: BinaryHeap<Prioritized> = BinaryHeap::new();
        let outcome = {
            let mut sink = |node: Open| {
                open.push(Prioritized { priority: node.score(), node });
            };
            let start = ensemble.start_hypothesis(src)?;
            beam_loop(ensemble, vec![start], n, max_len, None, Some(&mut sink))?
        };
        let mut stats = SearchStats { expansions: outcome.stats.expansions, ..Default::default() };

        let mut completes: Vec<PartialHypothesis> = Vec::new();
        for hyp in outcome.beam {
            if hyp.is_complete() {
                record_complete(&mut completes, hyp, n);
            } else if hyp.len() < max_len {
                // Still live when the first pass stopped.
                open.push(Prioritized { priority: hyp.score, node: Open::Ready(hyp) });
            }
        }

        while let Some(entry) = open.pop() {
            // Checked before anything else so a spent budget freezes
            // the result at exactly what the passes so far produced.
            if let Some(b) = budget {
                if stats.expansions >= b {
                    stats.truncated = true;
                    break;
                }
            }
            if entry.node.is_complete() {
                // Deferred complete hypotheses only become results once
                // re-expansion reaches them; recording is always safe.
                let hyp = entry.node.materialize(ensemble)?;
                record_complete(&mut completes, hyp, n);
                continue;
            }
            if prune {
                if let Some(best) = completes.first() {
                    if entry.priority <= best.score {
                        stats.pruned += 1;
                        continue;
                    }
                }
            }
            if entry.node.len() >= max_len {
                continue;
            }
            let hyp = entry.node.materialize(ensemble)?;
            let candidates = live_expansions(ensemble, &hyp)?;
            stats.expansions += 1;
            let parent = Rc::new(hyp);
            for exp in candidates {
                let child_score = parent.score + exp.combined + 0.0;
                if prune {
                    if let Some(best) = completes.first() {
                        if child_score <= best.score {
                            stats.pruned += 1;
                            continue;
                        }
                    }
                }
                if exp.token == EOS_ID {
                    let child = ensemble.advance(&parent, &exp)?;
                    record_complete(&mut completes, child, n);
                } else if parent.len() + 1 < max_len {
                    open.push(Prioritized {
                        priority: child_score,
                        node: Open::Pending { parent: parent.clone(), exp },
                    });
                }
            }
        }

        Ok(SearchResult::from_completes(completes, n, stats))
    }
}
