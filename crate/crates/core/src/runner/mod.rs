//! Corpus decoding runs: configuration, predictor construction, the
//! parallel pipeline, and output writing.
//!
//! [`run`] is what the command line calls: it loads every resource,
//! builds one decoder+predictor replica per worker, decodes the input
//! corpus through the [`pipeline`] roles, and writes the selected
//! output files in input order. A sentence that yields no hypothesis
//! (search failure, engine error, or worker panic) contributes an empty
//! line to the plain-text output so line alignment with the input is
//! never broken, and makes the exit status nonzero.

mod factory;
mod pipeline;

use std::fs;
use std::io::{BufWriter, Write};
use std::path::PathBuf;

use crate::decoders::{
    build_decoder, AstarDecoder, Decoder, DecoderConfig, DecoderKind, StepBoundHeuristic,
};
use crate::error::{Error, Result};
use crate::formats::{render_tokens, serialize_nbest, NbestEntry, NbestList, SymbolTable};
use crate::hypothesis::PartialHypothesis;
use crate::vocab::SourceSentence;

pub use factory::{PredictorParams, PredictorSpec, ResourceSet};
pub use pipeline::{decode_corpus, CorpusSummary, Replica, ReplicaFactory, SentenceRecord};

/// The output files a run can produce.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// One line per input sentence: the best hypothesis, detokenized,
    /// or an empty line for a failed sentence.
    Text,
    /// The full n-best list per sentence in the four-field
    /// "id ||| tokens ||| features ||| score" line format.
    Nbest,
}

impl OutputKind {
    pub fn name(self) -> &'static str {
        match self {
            OutputKind::Text => "text",
            OutputKind::Nbest => "nbest",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "text" => Ok(OutputKind::Text),
            "nbest" => Ok(OutputKind::Nbest),
            other => Err(Error::Config(format!(
                "unknown output kind '{other}'; supported: text, nbest"
            ))),
        }
    }
}

/// Everything one decoding run needs. Field defaults come from
/// [`RunConfig::new`]; the command line fills them from flags and an
/// optional key=value file.
#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Predictors in slot order; see [`PredictorSpec`].
    pub predictors: Vec<PredictorSpec>,
    /// Linear-combination weights, paired positionally with
    /// `predictors`. Empty means 1.0 for every slot.
    pub weights: Vec<f64>,
    pub params: PredictorParams,
    pub decoder: DecoderKind,
    pub decoder_config: DecoderConfig,
    /// Per-step bound for the best-first strategy's heuristic; `None`
    /// uses the zero heuristic.
    pub astar_per_step: Option<f64>,
    /// Source corpus, one tokenized sentence per line.
    pub input_path: PathBuf,
    /// "token<TAB>id" symbol table; `None` treats tokens as decimal ids.
    pub symtab_path: Option<PathBuf>,
    /// Explicit vocabulary size; the resources may still enlarge it.
    pub vocab_size: Option<u32>,
    pub outputs: Vec<OutputKind>,
    /// Output file path; "%s" is replaced by the output kind's name and
    /// is required when more than one output is selected.
    pub output_pattern: String,
    pub workers: usize,
    /// 1-based inclusive line range of the input to decode; ids keep
    /// their original corpus positions so per-sentence resources stay
    /// aligned.
    pub range: Option<(usize, usize)>,
}

impl RunConfig {
    pub fn new(input_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            predictors: Vec::new(),
            weights: Vec::new(),
            params: PredictorParams::default(),
            decoder: DecoderKind::Beam,
            decoder_config: DecoderConfig::default(),
            astar_per_step: None,
            input_path: input_path.into(),
            symtab_path: None,
            vocab_size: None,
            outputs: vec![OutputKind::Text],
            output_pattern: "out.%s".to_string(),
            workers: 1,
            range: None,
        }
    }
}

/// Decodes the configured corpus and writes the selected outputs.
/// Returns the process exit status: 0 iff every sentence produced a
/// hypothesis. Configuration and resource problems fail with `Err`
/// before any decoding starts.
pub fn run(config: &RunConfig) -> Result<i32> {
    config.decoder_config.validate()?;
    if config.workers == 0 {
        return Err(Error::Config("worker count must be at least 1".into()));
    }
    if config.outputs.is_empty() {
        return Err(Error::Config("at least one output kind is required".into()));
    }
    for (i, kind) in config.outputs.iter().enumerate() {
        if config.outputs[..i].contains(kind) {
            return Err(Error::Config(format!("duplicate output kind '{}'", kind.name())));
        }
    }
    if config.decoder == DecoderKind::Sepbeam && config.predictors.len() < 2 {
        return Err(Error::Config(
            "the separate-beams strategy needs at least two predictors".into(),
        ));
    }

    let symtab = match &config.symtab_path {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read symbol table {}: {e}", path.display()))
            })?;
            SymbolTable::parse(&text)
                .map_err(|e| Error::Config(format!("symbol table {}: {e}", path.display())))?
        }
        None => SymbolTable::numeric(),
    };
    let weights = if config.weights.is_empty() {
        vec![1.0; config.predictors.len()]
    } else {
        config.weights.clone()
    };
    let resources =
        ResourceSet::load(&config.predictors, &weights, &symtab, config.vocab_size)?;
    let slot_names = resources.slot_names();

    let input = fs::read_to_string(&config.input_path).map_err(|e| {
        Error::Config(format!("cannot read input {}: {e}", config.input_path.display()))
    })?;
    let sentences = parse_corpus(&input, &symtab, config.range)?;

    let mut writers = Vec::with_capacity(config.outputs.len());
    for &kind in &config.outputs {
        let path = output_path(&config.output_pattern, kind, config.outputs.len() > 1)?;
        let file = fs::File::create(&path).map_err(|e| {
            Error::Config(format!("cannot create output {}: {e}", path.display()))
        })?;
        writers.push((kind, BufWriter::new(file)));
    }

    let factory = || -> Result<Replica> {
        let ensemble = resources.build_ensemble(&config.params)?;
        let decoder = build_run_decoder(config)?;
        Ok((ensemble, decoder))
    };

    let mut write_error: Option<Error> = None;
    let summary = decode_corpus(sentences, config.workers, &factory, |record| {
        log_record(&record);
        if write_error.is_none() {
            if let Err(e) = write_record(&mut writers, &record, &symtab, &slot_names) {
                write_error = Some(e);
            }
        }
    })?;
    if let Some(e) = write_error {
        return Err(e);
    }
    for (_, writer) in &mut writers {
        writer.flush()?;
    }

    log::info!(
        "decoded {} sentences ({} failed): {} expansions, {} pruned, {} restarts, {} truncated",
        summary.sentences,
        summary.failed,
        summary.expansions,
        summary.pruned,
        summary.restarts,
        summary.truncated
    );
    Ok(if summary.failed == 0 { 0 } else { 1 })
}

/// Builds the configured decoder; factored out of `run` so each worker
/// replica gets its own instance.
fn build_run_decoder(config: &RunConfig) -> Result<Box<dyn Decoder>> {
    match (config.decoder, config.astar_per_step) {
        (DecoderKind::Astar, Some(step)) => Ok(Box::new(AstarDecoder::with_heuristic(
            config.decoder_config,
            Box::new(StepBoundHeuristic::new(step)),
        )?)),
        (kind, _) => build_decoder(kind, config.decoder_config),
    }
}

/// Parses the corpus, tags each sentence with its 0-based corpus
/// position, and applies the optional 1-based inclusive line range.
fn parse_corpus(
    input: &str,
    symtab: &SymbolTable,
    range: Option<(usize, usize)>,
) -> Result<Vec<SourceSentence>> {
    let all = crate::formats::parse_source_lines(input, symtab)?;
    let total = all.len();
    let sentences: Vec<SourceSentence> = all
        .into_iter()
        .enumerate()
        .map(|(i, s)| s.with_id(i))
        .collect();
    match range {
        None => Ok(sentences),
        Some((start, end)) => {
            if start < 1 || start > end {
                return Err(Error::Config(format!(
                    "range {start}:{end} must satisfy 1 <= start <= end"
                )));
            }
            if end > total {
                return Err(Error::Config(format!(
                    "range {start}:{end} exceeds the {total}-line input"
                )));
            }
            Ok(sentences
                .into_iter()
                .skip(start - 1)
                .take(end - start + 1)
                .collect())
        }
    }
}

fn output_path(pattern: &str, kind: OutputKind, multiple: bool) -> Result<PathBuf> {
    if pattern.contains("%s") {
        Ok(PathBuf::from(pattern.replace("%s", kind.name())))
    } else if multiple {
        Err(Error::Config(
            "the output pattern needs a %s placeholder to separate multiple output kinds".into(),
        ))
    } else {
        Ok(PathBuf::from(pattern))
    }
}

fn log_record(record: &SentenceRecord) {
    match &record.result {
        Ok(result) if !result.is_failure() => {
            let best = &result.nbest[0];
            log::info!(
                "sentence {}: score {:.6}, {} hypotheses, {} expansions, {} pruned",
                record.id,
                best.score,
                result.nbest.len(),
                result.stats.expansions,
                result.stats.pruned
            );
        }
        Ok(result) => log::warn!(
            "sentence {}: no complete hypothesis after {} expansions",
            record.id,
            result.stats.expansions
        ),
        Err(reason) => log::warn!("sentence {}: {reason}", record.id),
    }
}

fn write_record(
    writers: &mut [(OutputKind, BufWriter<fs::File>)],
    record: &SentenceRecord,
    symtab: &SymbolTable,
    slot_names: &[String],
) -> Result<()> {
    for (kind, writer) in writers {
        match kind {
            OutputKind::Text => {
                let line = match &record.result {
                    Ok(result) if !result.is_failure() => {
                        render_tokens(result.nbest[0].output_tokens(), symtab)
                    }
                    _ => String::new(),
                };
                writeln!(writer, "{line}")?;
            }
            OutputKind::Nbest => {
                let Ok(result) = &record.result else { continue };
                let entries: Vec<NbestEntry> = result
                    .nbest
                    .iter()
                    .map(|h| nbest_entry(record.id, h, slot_names))
                    .collect();
                let list = NbestList::new(entries).expect("single-sentence group");
                writer.write_all(serialize_nbest(&list, symtab).as_bytes())?;
            }
        }
    }
    Ok(())
}

fn nbest_entry(id: usize, hyp: &PartialHypothesis, slot_names: &[String]) -> NbestEntry {
    let features = slot_names
        .iter()
        .enumerate()
        .map(|(slot, name)| {
            let raw_total: f64 = hyp.breakdown.iter().map(|step| step[slot].raw).sum();
            (name.clone(), raw_total + 0.0)
        })
        .collect();
    NbestEntry {
        sentence_id: id,
        tokens: hyp.output_tokens().to_vec(),
        features,
        total: hyp.score,
    }
}
