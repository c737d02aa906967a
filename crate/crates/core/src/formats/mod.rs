//! Readers and writers for the external artifact formats the predictors
//! and the command line consume. Parsers reject malformed input rather
//! than repairing it; parsed artifacts are immutable and shareable.

pub mod arpa;
pub mod att;
pub mod nbest;
pub mod ngram_table;
pub mod symtab;
pub mod text;

pub use arpa::{parse_arpa, serialize_arpa, NgramModel};
pub use att::{parse_att_fst, serialize_att_fst, FstArc, Label, StateId, WeightedFst, EPSILON};
pub use nbest::{parse_nbest, serialize_nbest, NbestEntry, NbestList};
pub use ngram_table::{parse_ngram_table, serialize_ngram_table, NgramScores};
pub use symtab::SymbolTable;
pub use text::{parse_source_lines, render_tokens};
