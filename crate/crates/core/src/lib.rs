//! Modular sequence decoding.
//!
//! A decoding run wires together two independent axes:
//!
//! * **Predictors** score candidate next tokens. Each one implements the
//!   [`Predictor`] contract (initialize, predict, consume, state
//!   snapshot/restore) and knows nothing about search.
//! * **Decoders** search the space of token sequences using only the
//!   predictor contract, combining per-predictor scores in a weighted
//!   linear model.
//!
//! Scores are natural-log domain and higher is better; `-inf` marks an
//! impossible continuation and acts as a hard constraint under any
//! weight. Token ids reserve 0 for the unknown word, 1 for
//! begin-of-sentence and 2 for end-of-sentence.

pub mod error;
pub mod vocab;
pub mod posterior;
pub mod predictor;
pub mod hypothesis;
pub mod ensemble;
pub mod formats;
pub mod predictors;
pub mod wrappers;
pub mod decoders;
pub mod runner;

pub use error::{Error, Result};
pub use vocab::{SourceSentence, TokenId, Vocabulary, BOS_ID, EOS_ID, UNK_ID};
pub use posterior::{argmax, combine, Posterior};
pub use predictor::{Predictor, PredictorState, StatePayload};
pub use hypothesis::{compare_hypotheses, PartialHypothesis, ScorePair};
pub use ensemble::{Ensemble, Expansion, Slot};
pub use decoders::{
    build_decoder, Decoder, DecoderConfig, DecoderKind, SearchResult, SearchStats, TraceEvent,
};
pub use runner::{run, RunConfig};
