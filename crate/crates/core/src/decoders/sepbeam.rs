//! Separate-system beam search: one seed hypothesis per predictor slot,
//! each scored and advanced by its own slot only, all competing for the
//! same n beam slots. Approximates running the systems independently
//! and keeping the best complete hypothesis overall.

use crate::decoders::beam::beam_loop;
use crate::decoders::{Decoder, DecoderConfig, SearchResult};
use crate::ensemble::Ensemble;
use crate::error::{Error, Result};
use crate::vocab::SourceSentence;

pub struct SepbeamDecoder {
    config: DecoderConfig,
}

impl SepbeamDecoder {
    pub fn new(config: DecoderConfig) -> Result<Self> {
        config.validate()?;
        Ok(SepbeamDecoder { config })
    }
}

impl Decoder for SepbeamDecoder {
    fn name(&self) -> &'static str {
        "sepbeam"
    }

    fn decode(&mut self, ensemble: &mut Ensemble, src: &SourceSentence) -> Result<SearchResult> {
        if ensemble.slot_count() < 2 {
            return Err(Error::Usage(
                "separate-system beam search needs at least two predictors".into(),
            ));
        }
        let start = ensemble.start_hypothesis(src)?;
        let initial = (0..ensemble.slot_count())
            .map(|slot| {
                let mut h = start.clone();
                h.predictor_filter = Some(slot);
                h
            })
            .collect();
        let outcome = beam_loop(
            ensemble,
            initial,
            self.config.beam_size,
            self.config.effective_max_len(src),
            None,
            None,
        )?;
        Ok(outcome.into_result(self.config.beam_size))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::decoders::beam::BeamDecoder;
    use crate::decoders::testutil::{source, GARDEN_PATH_FST};
    use crate::ensemble::Slot;
    use crate::formats::parse_att_fst;
    use crate::predictors::FstPredictor;
    use crate::vocab::Vocabulary;

    /// Single chain a b eos with the given arc costs.
    fn chain_fst(a_cost: f64, b_cost: f64) -> String {
        format!("0\t1\t4\t4\t{a_cost}\n1\t2\t5\t5\t{b_cost}\n2\t0.0\n")
    }

    fn fst_slot(att: &str, weight: f64) -> Slot {
        let fst = Arc::new(parse_att_fst(att).unwrap());
        Slot { predictor: Box::new(FstPredictor::deterministic(fst).unwrap()), weight }
    }

    fn beam_best(att: &str, weight: f64, n: usize) -> f64 {
        let mut ens = Ensemble::new(vec![fst_slot(att, weight)], Vocabulary::new(6).unwrap()).unwrap();
        let mut dec =
            BeamDecoder::new(DecoderConfig { beam_size: n, ..DecoderConfig::default() }).unwrap();
        let result = dec.decode(&mut ens, &source(&[7, 7])).unwrap();
        result.best().unwrap().score
    }

    #[test]
    fn equals_the_best_single_system_run() {
        let cheap = chain_fst(1.0, 1.0);
        let costly = chain_fst(0.5, 3.0);
        let slots = vec![fst_slot(&cheap, 1.0), fst_slot(&costly, 1.0)];
        let mut ens = Ensemble::new(slots, Vocabulary::new(6).unwrap()).unwrap();
        let mut dec =
            SepbeamDecoder::new(DecoderConfig { beam_size: 4, ..DecoderConfig::default() })
                .unwrap();
        let combined = dec.decode(&mut ens, &source(&[7, 7])).unwrap();

        let alone_a = beam_best(&cheap, 1.0, 4);
        let alone_b = beam_best(&costly, 1.0, 4);
        assert!((combined.best().unwrap().score - alone_a.max(alone_b)).abs() < 1e-12);
    }

    #[test]
    fn slot_weights_still_apply() {
        // Weighted, the costly chain (-3.5 raw) beats the cheap one:
        // 0.5 * -3.5 = -1.75 vs 1.0 * -2.0.
        let cheap = chain_fst(1.0, 1.0);
        let costly = chain_fst(0.5, 3.0);
        let slots = vec![fst_slot(&cheap, 1.0), fst_slot(&costly, 0.5)];
        let mut ens = Ensemble::new(slots, Vocabulary::new(6).unwrap()).unwrap();
        let mut dec =
            SepbeamDecoder::new(DecoderConfig { beam_size: 4, ..DecoderConfig::default() })
                .unwrap();
        let result = dec.decode(&mut ens, &source(&[7, 7])).unwrap();
        assert!((result.best().unwrap().score - -1.75).abs() < 1e-12);
        assert_eq!(result.best().unwrap().predictor_filter, Some(1));
    }

    #[test]
    fn identical_systems_match_the_single_system_beam() {
        let slots = vec![fst_slot(GARDEN_PATH_FST, 1.0), fst_slot(GARDEN_PATH_FST, 1.0)];
        let mut ens = Ensemble::new(slots, Vocabulary::new(6).unwrap()).unwrap();
        let mut dec =
            SepbeamDecoder::new(DecoderConfig { beam_size: 4, ..DecoderConfig::default() })
                .unwrap();
        let result = dec.decode(&mut ens, &source(&[7, 7, 7])).unwrap();
        assert!((result.best().unwrap().score - beam_best(GARDEN_PATH_FST, 1.0, 4)).abs() < 1e-12);
    }

    #[test]
    fn breakdowns_reference_exactly_one_slot() {
        let cheap = chain_fst(1.0, 1.0);
        let costly = chain_fst(0.5, 3.0);
        let slots = vec![fst_slot(&cheap, 1.0), fst_slot(&costly, 1.0)];
        let mut ens = Ensemble::new(slots, Vocabulary::new(6).unwrap()).unwrap();
        let mut dec =
            SepbeamDecoder::new(DecoderConfig { beam_size: 4, ..DecoderConfig::default() })
                .unwrap();
        let result = dec.decode(&mut ens, &source(&[7, 7])).unwrap();
        for hyp in &result.nbest {
            let own = hyp.predictor_filter.expect("sepbeam hypotheses carry a filter");
            for step in &hyp.breakdown {
                for (slot, pair) in step.iter().enumerate() {
                    if slot != own {
                        assert_eq!(pair.raw, 0.0);
                        assert_eq!(pair.weight, 0.0);
                    } else {
                        assert_eq!(pair.weight, 1.0);
                    }
                }
            }
        }
    }

    #[test]
    fn rejects_a_single_predictor_ensemble() {
        let mut ens = Ensemble::new(
            vec![fst_slot(GARDEN_PATH_FST, 1.0)],
            Vocabulary::new(6).unwrap(),
        )
        .unwrap();
        let mut dec = SepbeamDecoder::new(DecoderConfig::default()).unwrap();
        assert!(dec.decode(&mut ens, &source(&[7])).is_err());
    }
}
