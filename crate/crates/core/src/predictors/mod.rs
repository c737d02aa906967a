//! The built-in scoring modules. Constraint predictors (fst, forced,
//! forcedlst, bow) expose a restrictive posterior and kill hypotheses
//! that violate them; soft predictors (ngram, wc, unkc, ngramc, length)
//! score every token.

pub mod bow;
pub mod forced;
pub mod forcedlst;
pub mod fst;
pub mod length;
pub mod ngram;
pub mod ngramc;
pub mod unkc;
pub mod wc;

pub use bow::BagOfWordsPredictor;
pub use forced::ForcedPredictor;
pub use forcedlst::{NbestMode, NbestPredictor};
pub use fst::{FstPredictor, LabelMerge};
pub use length::LengthPredictor;
pub use ngram::NgramPredictor;
pub use ngramc::NgramCountPredictor;
pub use unkc::UnkCountPredictor;
pub use wc::WordCountPredictor;
