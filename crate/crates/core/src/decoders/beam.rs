//! Beam search: expand every live hypothesis, keep the n best
//! extensions, consume, and stop as soon as the best hypothesis in the
//! beam is complete.

use std::rc::Rc;

use crate::decoders::{
    live_expansions, Decoder, DecoderConfig, Open, SearchResult, SearchStats, TraceEvent,
};
use crate::ensemble::{Ensemble, Expansion};
use crate::error::Result;
use crate::hypothesis::{compare_hypotheses, PartialHypothesis};
use crate::vocab::{SourceSentence, TokenId};

pub struct BeamDecoder {
    config: DecoderConfig,
}

impl BeamDecoder {
    pub fn new(config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        Ok(BeamDecoder { config })
    }

    /// Like `decode`, but records every engine call for fidelity checks.
    pub fn decode_traced(
        &mut self,
        ensemble: &mut Ensemble,
        src: &SourceSentence,
        trace: &mut Vec<TraceEvent>,
    ) -> Result<SearchResult> {
        let start = ensemble.start_hypothesis(src)?;
        trace.push(TraceEvent::Initialize);
        let outcome = beam_loop(
            ensemble,
            vec![start],
            self.config.beam_size,
            self.config.effective_max_len(src),
            Some(trace),
            None,
        )?;
        Ok(outcome.into_result(self.config.beam_size))
    }
}

impl Decoder for BeamDecoder {
    fn name(&self) -> &'static str {
        "beam"
    }

    fn decode(&mut self, ensemble: &mut Ensemble, src: &SourceSentence) -> Result<SearchResult> {
        let start = ensemble.start_hypothesis(src)?;
        let outcome = beam_loop(
            ensemble,
            vec![start],
            self.config.beam_size,
            self.config.effective_max_len(src),
            None,
            None,
        )?;
        Ok(outcome.into_result(self.config.beam_size))
    }
}

/// Final beam contents plus counters; `beam` is sorted best first and
/// empty when the search died out.
pub(crate) struct BeamOutcome {
    pub(crate) beam: Vec<PartialHypothesis>,
    pub(crate) stats: SearchStats,
}

impl BeamOutcome {
    /// Standard result shape: the complete hypotheses left in the beam.
    pub(crate) fn into_result(self, cap: usize) -> SearchResult {
        let completes = self.beam.into_iter().filter(|h| h.is_complete()).collect();
        SearchResult::from_completes(completes, cap, self.stats)
    }
}

/// One candidate for the next beam: either a hypothesis carried over
/// unexpanded because it is already complete, or a scored extension.
enum Cand {
    Carried(usize),
    Child { parent: usize, exp: Expansion },
}

/// The shared beam iteration. Both complete hypotheses and extensions
/// compete for the n slots; complete ones occupy theirs without being
/// expanded further. Candidates that lose the cutoff are handed to
/// `spill` (still unconsumed where possible) for strategies that revisit
/// them later.
pub(crate) fn beam_loop(
    ensemble: &mut Ensemble,
    initial: Vec<PartialHypothesis>,
    n: usize,
    max_len: usize,
    mut trace: Option<&mut Vec<TraceEvent>>,
    mut spill: Option<&mut dyn FnMut(Open)>,
) -> Result<BeamOutcome> {
    let mut stats = SearchStats::default();
    let mut beam = initial;
    beam.sort_by(compare_hypotheses);

    loop {
        match beam.first() {
            None => return Ok(BeamOutcome { beam: Vec::new(), stats }),
            Some(best) if best.is_complete() => return Ok(BeamOutcome { beam, stats }),
            Some(_) => {}
        }

        // Expansion sweep over the current beam.
        let mut cands: Vec<(f64, Vec<TokenId>, Cand)> = Vec::new();
        for (i, hyp) in beam.iter().enumerate() {
            if hyp.is_complete() {
                cands.push((hyp.score, hyp.trajectory.clone(), Cand::Carried(i)));
                continue;
            }
            if hyp.len() >= max_len {
                continue; // cannot be completed within the cap
            }
            if let Some(t) = trace.as_deref_mut() {
                t.push(TraceEvent::RestoreState { trajectory: hyp.trajectory.clone() });
                t.push(TraceEvent::PredictNext { trajectory: hyp.trajectory.clone() });
            }
            let expansions = live_expansions(ensemble, hyp)?;
            stats.expansions += 1;
            for exp in expansions {
                let mut trajectory = hyp.trajectory.clone();
                trajectory.push(exp.token);
                cands.push((hyp.score + exp.combined + 0.0, trajectory, Cand::Child { parent: i, exp }));
            }
        }
        if cands.is_empty() {
            return Ok(BeamOutcome { beam: Vec::new(), stats });
        }

        cands.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        let keep = n.min(cands.len());
        stats.pruned += (cands.len() - keep) as u64;

        if let Some(t) = trace.as_deref_mut() {
            for (score, trajectory, _) in &cands[..keep] {
                t.push(TraceEvent::Selected { trajectory: trajectory.clone(), score: *score });
            }
        }

        // Consume phase: move survivors into the next beam, handing
        // losers to the spill sink before the parents are dropped.
        let mut parents: Vec<Option<PartialHypothesis>> = beam.into_iter().map(Some).collect();
        let mut parent_rcs: Vec<Option<Rc<PartialHypothesis>>> = vec![None; parents.len()];
        let mut next = Vec::with_capacity(keep);
        let (selected, rest) = {
            let mut c = cands;
            let rest = c.split_off(keep);
            (c, rest)
        };
        if let Some(sink) = spill.as_deref_mut() {
            for (_, _, cand) in rest {
                match cand {
                    Cand::Carried(i) => {
                        // A complete hypothesis that fell out of the
                        // beam; it may still matter as an incumbent.
                        if let Some(h) = parents[i].take() {
                            sink(Open::Ready(h));
                        }
                    }
                    Cand::Child { parent, exp } => {
                        let rc = parent_rcs[parent]
                            .get_or_insert_with(|| {
                                Rc::new(parents[parent].clone().expect("parent still in beam"))
                            })
                            .clone();
                        sink(Open::Pending { parent: rc, exp });
                    }
                }
            }
        }
        for (_, _, cand) in selected {
            match cand {
                Cand::Carried(i) => {
                    if let Some(h) = parents[i].take() {
                        next.push(h);
                    }
                }
                Cand::Child { parent, exp } => {
                    let p = parents[parent].as_ref().expect("parent still in beam");
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(TraceEvent::RestoreState { trajectory: p.trajectory.clone() });
                        t.push(TraceEvent::Consume { token: exp.token });
                    }
                    let child = ensemble.advance(p, &exp)?;
                    if let Some(t) = trace.as_deref_mut() {
                        t.push(TraceEvent::CaptureState { trajectory: child.trajectory.clone() });
                    }
                    next.push(child);
                }
            }
        }
        next.sort_by(compare_hypotheses);
        beam = next;
    }
}
