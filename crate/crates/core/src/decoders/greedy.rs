//! Greedy decoding: extend the single hypothesis by the best-scoring
//! token until the end symbol or the length cap.

use crate::decoders::{Decoder, DecoderConfig, SearchResult, SearchStats, TraceEvent};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::hypothesis::ScorePair;
use crate::posterior::argmax;
use crate::vocab::{SourceSentence, EOS_ID};

pub struct GreedyDecoder {
    config: DecoderConfig,
}

impl GreedyDecoder {
    pub fn new(config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        Ok(GreedyDecoder { config })
    }

    /// Like `decode`, but records every engine call for fidelity checks.
    pub fn decode_traced(
        &mut self,
        ensemble: &mut Ensemble,
        src: &SourceSentence,
        trace: &mut Vec<TraceEvent>,
    ) -> Result<SearchResult> {
        self.run(ensemble, src, Some(trace))
    }

    fn run(
        &mut self,
        ensemble: &mut Ensemble,
        src: &SourceSentence,
        mut trace: Option<&mut Vec<TraceEvent>>,
    ) -> Result<SearchResult> {
        let max_len = self.config.effective_max_len(src);
        let mut stats = SearchStats::default();
        let mut emit = |e: TraceEvent| {
            if let Some(t) = trace.as_deref_mut() {
                t.push(e);
            }
        };

        let mut hyp = ensemble.start_hypothesis(src)?;
        emit(TraceEvent::Initialize);

        // The end symbol is consumed like any other token before the
        // loop exit is checked, so predictors see the full trajectory.
        while hyp.len() < max_len {
            emit(TraceEvent::PredictNext { trajectory: hyp.trajectory.clone() });
            let (combined, raws) = match ensemble.predict() {
                Ok(p) => p,
                Err(Error::DeadHypothesis) => return Ok(failure(stats)),
                Err(e) => return Err(e),
            };
            stats.expansions += 1;
            let (token, score) = match argmax(&combined, ensemble.vocab()) {
                Ok(pick) => pick,
                Err(Error::DeadHypothesis) => return Ok(failure(stats)),
                Err(e) => return Err(e),
            };
            emit(TraceEvent::Chosen { token, score });

            hyp.trajectory.push(token);
            hyp.score += score + 0.0;
            hyp.breakdown.push(
                raws.iter()
                    .zip(ensemble.weights())
                    .map(|(p, weight)| ScorePair { raw: p.score(token), weight })
                    .collect(),
            );
            ensemble.consume(token)?;
            emit(TraceEvent::Consume { token });

            if token == EOS_ID {
                hyp.states = ensemble.capture_states();
                return Ok(SearchResult { nbest: vec![hyp], stats });
            }
        }
        // Length cap reached without the end symbol.
        Ok(failure(stats))
    }
}

fn failure(stats: SearchStats) -> SearchResult {
    SearchResult { nbest: Vec::new(), stats }
}

impl Decoder for GreedyDecoder {
    fn name(&self) -> &'static str {
        "greedy"
    }

    fn decode(&mut self, ensemble: &mut Ensemble, src: &SourceSentence) -> Result<SearchResult> {
        self.run(ensemble, src, None)
    }
}
