//! Adapters that change the tokenization level or id space of an inner
//! predictor, transparently to the search.

pub mod fsttok;
pub mod map_vocab;

pub use fsttok::FsttokWrapper;
pub use map_vocab::{map_posterior, MapVocabWrapper};
