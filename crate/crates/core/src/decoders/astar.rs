//! Best-first search over a priority queue ordered by accumulated score
//! plus a heuristic estimate of the score still to come. With an
//! admissible (never underestimating) heuristic the first complete
//! hypothesis popped is the global optimum.

use std::collections::BinaryHeap;
use std::rc::Rc;

use crate::decoders::{
    live_expansions, Decoder, DecoderConfig, Open, Prioritized, SearchResult, SearchStats,
};
use crate::ensemble::Ensemble;
use crate::error::Result;
use crate::hypothesis::PartialHypothesis;
use crate::vocab::{SourceSentence, TokenId, EOS_ID};

/// Upper-bound estimate of the score a partial hypothesis can still
/// accumulate. `trajectory` includes the start symbol; `remaining` is
/// the number of tokens the length cap still allows. Complete
/// hypotheses never reach the heuristic; their estimate is zero by
/// construction.
pub trait Heuristic: Send {
    fn estimate(&self, trajectory: &[TokenId], remaining: usize) -> f64;
}

/// The trivial bound: no score is left to gain. Admissible whenever all
/// per-step scores are ≤ 0.
pub struct ZeroHeuristic;

impl Heuristic for ZeroHeuristic {
    fn estimate(&self, _trajectory: &[TokenId], _remaining: usize) -> f64 {
        0.0
    }
}

/// Per-step bound times remaining steps. Feeding it the largest weighted
/// score any predictor slot can emit per step keeps it admissible;
/// larger values bias the queue toward shallow nodes, smaller (more
/// negative) values toward deep ones.
pub struct StepBoundHeuristic {
    per_step: f64,
}

impl StepBoundHeuristic {
    pub fn new(per_step: f64) -> Self {
        StepBoundHeuristic { per_step }
    }
}

impl Heuristic for StepBoundHeuristic {
    fn estimate(&self, _trajectory: &[TokenId], remaining: usize) -> f64 {
        self.per_step * remaining as f64
    }
}

pub struct AstarDecoder {
    config: DecoderConfig,
    heuristic: Box<dyn Heuristic>,
}

impl AstarDecoder {
    /// Zero-heuristic variant; optimal under nonpositive scores.
    pub fn new(config: DecoderConfig) -> Result<Self> {
        Self::with_heuristic(config, Box::new(ZeroHeuristic))
    }

    pub fn with_heuristic(config: DecoderConfig, heuristic: Box<dyn Heuristic>) -> Result<Self> {
        config.validate()?;
        Ok(AstarDecoder { config, heuristic })
    }
}

impl Decoder for AstarDecoder {
    fn name(&self) -> &'static str {
        "astar"
    }

    fn decode(&mut self, ensemble: &mut Ensemble, src: &SourceSentence) -> Result<SearchResult> {
        let max_len = self.config.effective_max_len(src);
        let budget = self.config.node_budget;
        let mut stats = SearchStats::default();
        let mut goals: Vec<PartialHypothesis> = Vec::new();

        let root = ensemble.start_hypothesis(src)?;
        let mut queue: BinaryHeap<Prioritized> = BinaryHeap::new();
        let f0 = root.score + self.heuristic.estimate(&root.trajectory, max_len);
        queue.push(Prioritized { priority: f0, node: Open::Ready(root) });

        while let Some(entry) = queue.pop() {
            if entry.node.is_complete() {
                let goal = entry.node.materialize(ensemble)?;
                goals.push(goal);
                if goals.len() >= self.config.beam_size {
                    break;
                }
                continue;
            }
            if entry.node.len() >= max_len {
                continue; // cannot be completed within the cap
            }
            if let Some(b) = budget {
                if stats.expansions >= b {
                    stats.truncated = true;
                    break;
                }
            }
            let hyp = entry.node.materialize(ensemble)?;
            let candidates = live_expansions(ensemble, &hyp)?;
            stats.expansions += 1;
            let parent = Rc::new(hyp);
            for exp in candidates {
                if exp.token != EOS_ID && parent.len() + 1 >= max_len {
                    continue;
                }
                let score = parent.score + exp.combined + 0.0;
                let priority = if exp.token == EOS_ID {
                    score
                } else {
                    let mut trajectory = parent.trajectory.clone();
                    trajectory.push(exp.token);
                    let remaining = max_len - (parent.len() + 1);
                    score + self.heuristic.estimate(&trajectory, remaining)
                };
                queue.push(Prioritized {
                    priority,
                    node: Open::Pending { parent: parent.clone(), exp },
                });
            }
        }

        Ok(SearchResult::from_completes(goals, self.config.beam_size, stats))
    }
}
