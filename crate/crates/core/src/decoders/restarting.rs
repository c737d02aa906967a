//! Restarting search: greedy descents to complete hypotheses, with all
//! bypassed siblings parked in a pool of open nodes. Each round restarts
//! from the best open node, so strong incumbents appear early and the
//! admissible bound cuts the pool aggressively.

use std::collections::BinaryHeap;
use std::rc::Rc;

use crate::decoders::dfs::record_complete;
use crate::decoders::{
    live_expansions, Decoder, DecoderConfig, Open, Prioritized, SearchResult, SearchStats,
};
use crate::ensemble::Ensemble;
use crate::error::Result;
use crate::hypothesis::PartialHypothesis;
use crate::vocab::{SourceSentence, EOS_ID};

pub struct RestartingDecoder {
    config: DecoderConfig,
}

impl RestartingDecoder {
    pub fn new(config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        Ok(RestartingDecoder { config })
    }
}

impl Decoder for RestartingDecoder {
    fn name(&self) -> &'static str {
        "restarting"
    }

    fn decode(&mut self, ensemble: &mut Ensemble, src: &SourceSentence) -> Result<SearchResult> {
        let max_len = self.config.effective_max_len(src);
        let prune = self.config.nonpositive_scores;
        let budget = self.config.node_budget;
        let mut stats = SearchStats::default();
        let mut completes: Vec<PartialHypothesis> = Vec::new();
        let mut pool: BinaryHeap<Prioritized> = BinaryHeap::new();
        let mut descents: u64 = 0;

        let root = ensemble.start_hypothesis(src)?;
        pool.push(Prioritized { priority: root.score, node: Open::Ready(root) });

        'pool: while let Some(entry) = pool.pop() {
            if prune {
                if let Some(best) = completes.first() {
                    if entry.node.score() <= best.score {
                        stats.pruned += 1;
                        continue;
                    }
                }
            }
            descents += 1;
            let mut cur = entry.node.materialize(ensemble)?;

            // Greedy descent: extend by the best candidate, parking the
            // rest, until the end symbol or a dead end.
            loop {
                if cur.is_complete() {
                    record_complete(&mut completes, cur, self.config.beam_size);
                    break;
                }
                if cur.len() >= max_len {
                    break;
                }
                if let Some(b) = budget {
                    if stats.expansions >= b {
                        stats.truncated = true;
                        break 'pool;
                    }
                }
                let candidates = live_expansions(ensemble, &cur)?;
                stats.expansions += 1;
                if candidates.is_empty() {
                    break;
                }
                let parent = Rc::new(cur);
                let mut followed = None;
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
                    if followed.is_none() {
                        followed = Some(exp);
                    } else if exp.token == EOS_ID || parent.len() + 1 < max_len {
                        // Nodes that hit the cap while incomplete can
                        // never finish, so they are not worth parking.
                        pool.push(Prioritized {
                            priority: child_score,
                            node: Open::Pending { parent: parent.clone(), exp },
                        });
                    }
                }
                match followed {
                    // Candidates are sorted, so the first survivor is
                    // the locally best continuation. A complete child is
                    // recorded by the next loop iteration.
                    Some(exp) => cur = ensemble.advance(&parent, &exp)?,
                    None => break,
                }
            }
        }

        stats.restarts = descents.saturating_sub(1);
        Ok(SearchResult::from_completes(completes, self.config.beam_size, stats))
    }
}
