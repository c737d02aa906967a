//! Turns named predictor specifications into ensemble slots.
//!
//! Resource files are parsed once into an immutable [`ResourceSet`];
//! every call to [`ResourceSet::build_ensemble`] then produces an
//! independent predictor replica over the shared artifacts, which is
//! what lets workers decode concurrently without sharing scoring state.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::ensemble::{Ensemble, Slot};
use crate::error::{Error, Result};
use crate::formats::{
    parse_arpa, parse_att_fst, parse_nbest, parse_ngram_table, parse_source_lines, NbestList,
    NgramModel, NgramScores, SymbolTable, WeightedFst,
};
use crate::predictor::Predictor;
use crate::predictors::{
    BagOfWordsPredictor, ForcedPredictor, FstPredictor, LabelMerge, LengthPredictor, NbestMode,
    NbestPredictor, NgramCountPredictor, NgramPredictor, UnkCountPredictor, WordCountPredictor,
};
use crate::vocab::{TokenId, Vocabulary};
use crate::wrappers::FsttokWrapper;

/// One requested predictor: its name (optionally `fsttok_`-prefixed to
/// wrap it in a tokenization transducer) and the files it reads.
#[derive(Debug, Clone, Default)]
pub struct PredictorSpec {
    pub name: String,
    /// Resource file of the base predictor, for the kinds that read one.
    pub path: Option<PathBuf>,
    /// Tokenization transducer, required iff the name carries the
    /// `fsttok_` prefix.
    pub wrapper_path: Option<PathBuf>,
}

impl PredictorSpec {
    pub fn new(name: impl Into<String>) -> Self {
        PredictorSpec { name: name.into(), ..PredictorSpec::default() }
    }

    pub fn with_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.path = Some(path.into());
        self
    }

    pub fn with_wrapper_path(mut self, path: impl Into<PathBuf>) -> Self {
        self.wrapper_path = Some(path.into());
        self
    }
}

/// Numeric knobs for the predictors that take parameters instead of (or
/// besides) a resource file. One set applies to the whole run.
#[derive(Debug, Clone)]
pub struct PredictorParams {
    /// Unknown-word rate model λ = c0 + c1 · (unknown source tokens).
    pub unkc_c0: f64,
    pub unkc_c1: f64,
    /// Length model mean μ = a · source length + b, deviation sigma.
    pub length_a: f64,
    pub length_b: f64,
    pub length_sigma: f64,
    /// Whether bags of words may be emitted with repetitions.
    pub bow_repetition: bool,
    /// Whether the n-best constraint re-scores with the stored totals
    /// instead of acting as a pure constraint.
    pub nbest_rescore: bool,
    /// How the nondeterministic automaton merges equal-label arcs.
    pub nfst_merge: LabelMerge,
}

impl Default for PredictorParams {
    fn default() -> Self {
        PredictorParams {
            unkc_c0: UnkCountPredictor::DEFAULT_C0,
            unkc_c1: UnkCountPredictor::DEFAULT_C1,
            length_a: LengthPredictor::DEFAULT_A,
            length_b: LengthPredictor::DEFAULT_B,
            length_sigma: LengthPredictor::DEFAULT_SIGMA,
            bow_repetition: false,
            nbest_rescore: false,
            nfst_merge: LabelMerge::Max,
        }
    }
}

/// The base predictor kinds the factory can instantiate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum BaseKind {
    Fst,
    Nfst,
    Ngram,
    Wc,
    Unkc,
    Forced,
    Forcedlst,
    Bow,
    Ngramc,
    Length,
}

const BASE_NAMES: [(&str, BaseKind); 10] = [
    ("fst", BaseKind::Fst),
    ("nfst", BaseKind::Nfst),
    ("ngram", BaseKind::Ngram),
    ("wc", BaseKind::Wc),
    ("unkc", BaseKind::Unkc),
    ("forced", BaseKind::Forced),
    ("forcedlst", BaseKind::Forcedlst),
    ("bow", BaseKind::Bow),
    ("ngramc", BaseKind::Ngramc),
    ("length", BaseKind::Length),
];

impl BaseKind {
    fn from_name(name: &str) -> Result<BaseKind> {
        BASE_NAMES
            .iter()
            .find(|(n, _)| *n == name)
            .map(|&(_, k)| k)
            .ok_or_else(|| {
                let known: Vec<&str> = BASE_NAMES.iter().map(|(n, _)| *n).collect();
                Error::Config(format!(
                    "unknown predictor '{name}'; this build supports {} \
                     (see the predictor table in README.md)",
                    known.join(", ")
                ))
            })
    }

    fn needs_path(self) -> bool {
        !matches!(self, BaseKind::Wc | BaseKind::Unkc | BaseKind::Length)
    }
}

/// A predictor's parsed resource, shared read-only across replicas.
enum LoadedResource {
    Fst(Arc<WeightedFst>),
    Ngram(Arc<NgramModel>),
    Nbest(Arc<NbestList>),
    /// One token sequence per corpus sentence (references or bags).
    Lines(Arc<Vec<Vec<TokenId>>>),
    Table(Arc<NgramScores>),
    None,
}

struct LoadedSpec {
    name: String,
    base: BaseKind,
    wrapper: Option<Arc<WeightedFst>>,
    resource: LoadedResource,
    weight: f64,
}

/// Every artifact a run needs, loaded once and immutable. Cheap to share
/// across worker threads; replicas are built per worker.
pub struct ResourceSet {
    specs: Vec<LoadedSpec>,
    vocab: Vocabulary,
}

impl std::fmt::Debug for ResourceSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ResourceSet")
            .field("predictors", &self.slot_names())
            .field("vocab", &self.vocab)
            .finish_non_exhaustive()
    }
}

impl ResourceSet {
    /// Parses every referenced resource file and fixes the vocabulary.
    ///
    /// The vocabulary size is the largest of: the reserved-id minimum,
    /// an explicit `vocab_size`, the symbol table's own extent, and one
    /// past the highest token id in any loaded resource.
    pub fn load(
        specs: &[PredictorSpec],
        weights: &[f64],
        symtab: &SymbolTable,
        vocab_size: Option<u32>,
    ) -> Result<ResourceSet> {
        if specs.is_empty() {
            return Err(Error::Config("at least one predictor is required".into()));
        }
        if specs.len() != weights.len() {
            return Err(Error::Config(format!(
                "{} predictors but {} weights; the lists pair positionally",
                specs.len(),
                weights.len()
            )));
        }
        let mut loaded = Vec::with_capacity(specs.len());
        let mut max_id: TokenId = 0;
        for (spec, &weight) in specs.iter().zip(weights) {
            let (wrapped, base_name) = split_wrapper(&spec.name);
            let base = BaseKind::from_name(base_name)?;
            let wrapper = match (wrapped, &spec.wrapper_path) {
                (false, None) => None,
                (false, Some(_)) => {
                    return Err(Error::Config(format!(
                        "predictor '{}' is not wrapped and takes no transducer",
                        spec.name
                    )))
                }
                (true, None) => {
                    return Err(Error::Config(format!(
                        "wrapped predictor '{}' needs a tokenization transducer file",
                        spec.name
                    )))
                }
                (true, Some(path)) => {
                    let fst = parse_resource(path, &spec.name, "transducer", parse_att_fst)?;
                    max_id = max_id.max(fst_max_label(&fst));
                    Some(Arc::new(fst))
                }
            };
            let resource = load_base_resource(spec, base, symtab, &mut max_id)?;
            loaded.push(LoadedSpec { name: spec.name.clone(), base, wrapper, resource, weight });
        }
        let mut size = (max_id + 1).max(3);
        if let Some(explicit) = vocab_size {
            size = size.max(explicit);
        }
        if let Some(implied) = symtab.implied_size() {
            size = size.max(implied);
        }
        Ok(ResourceSet { specs: loaded, vocab: Vocabulary::new(size)? })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    /// The requested predictor names, in slot order.
    pub fn slot_names(&self) -> Vec<String> {
        self.specs.iter().map(|s| s.name.clone()).collect()
    }

    pub fn slot_count(&self) -> usize {
        self.specs.len()
    }

    /// Instantiates a fresh, independent predictor ensemble over the
    /// shared resources. Each worker calls this once for its replica.
    pub fn build_ensemble(&self, params: &PredictorParams) -> Result<Ensemble> {
        let mut slots = Vec::with_capacity(self.specs.len());
        for spec in &self.specs {
            let base = build_base(spec, params)?;
            let predictor: Box<dyn Predictor> = match &spec.wrapper {
                Some(transducer) => Box::new(FsttokWrapper::new(base, Arc::clone(transducer))),
                None => base,
            };
            slots.push(Slot { predictor, weight: spec.weight });
        }
        Ensemble::new(slots, self.vocab.clone())
    }
}

/// Splits an optional `fsttok_` wrapper prefix off a predictor name.
fn split_wrapper(name: &str) -> (bool, &str) {
    match name.strip_prefix("fsttok_") {
        Some(inner) => (true, inner),
        None => (false, name),
    }
}

fn parse_resource<T>(
    path: &Path,
    predictor: &str,
    what: &str,
    parse: impl FnOnce(&str) -> Result<T>,
) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| {
        Error::Config(format!(
            "cannot read {what} {} for predictor '{predictor}': {e}",
            path.display()
        ))
    })?;
    parse(&text).map_err(|e| {
        Error::Config(format!(
            "{what} {} for predictor '{predictor}': {e}",
            path.display()
        ))
    })
}

fn load_base_resource(
    spec: &PredictorSpec,
    base: BaseKind,
    symtab: &SymbolTable,
    max_id: &mut TokenId,
) -> Result<LoadedResource> {
    let path = match &spec.path {
        Some(path) => path,
        None if base.needs_path() => {
            return Err(Error::Config(format!(
                "predictor '{}' needs a resource file",
                spec.name
            )))
        }
        None => return Ok(LoadedResource::None),
    };
    if !base.needs_path() {
        return Err(Error::Config(format!(
            "predictor '{}' takes no resource file, got {}",
            spec.name,
            path.display()
        )));
    }
    Ok(match base {
        BaseKind::Fst | BaseKind::Nfst => {
            let fst = parse_resource(path, &spec.name, "automaton", parse_att_fst)?;
            *max_id = (*max_id).max(fst_max_label(&fst));
            LoadedResource::Fst(Arc::new(fst))
        }
        BaseKind::Ngram => {
            let model =
                parse_resource(path, &spec.name, "language model", |t| parse_arpa(t, symtab))?;
            *max_id = (*max_id).max(model.tokens().max().unwrap_or(0));
            LoadedResource::Ngram(Arc::new(model))
        }
        BaseKind::Forcedlst => {
            let list = parse_resource(path, &spec.name, "n-best list", |t| parse_nbest(t, symtab))?;
            for entry in list.entries() {
                *max_id = (*max_id).max(entry.tokens.iter().copied().max().unwrap_or(0));
            }
            LoadedResource::Nbest(Arc::new(list))
        }
        BaseKind::Ngramc => {
            let table =
                parse_resource(path, &spec.name, "n-gram table", |t| parse_ngram_table(t, symtab))?;
            for key in table.keys() {
                *max_id = (*max_id).max(key.iter().copied().max().unwrap_or(0));
            }
            LoadedResource::Table(Arc::new(table))
        }
        BaseKind::Forced | BaseKind::Bow => {
            let lines = parse_resource(path, &spec.name, "token file", |t| {
                parse_source_lines(t, symtab)
            })?;
            let mut lines: Vec<Vec<TokenId>> =
                lines.into_iter().map(|s| s.tokens().to_vec()).collect();
            for line in &lines {
                *max_id = (*max_id).max(line.iter().copied().max().unwrap_or(0));
            }
            if base == BaseKind::Forced {
                // Reference files carry surface tokens only; the forced
                // constraint ends each reference at the end symbol.
                for line in &mut lines {
                    line.push(crate::vocab::EOS_ID);
                }
            }
            LoadedResource::Lines(Arc::new(lines))
        }
        BaseKind::Wc | BaseKind::Unkc | BaseKind::Length => unreachable!("checked needs_path"),
    })
}

fn build_base(spec: &LoadedSpec, params: &PredictorParams) -> Result<Box<dyn Predictor>> {
    Ok(match (spec.base, &spec.resource) {
        (BaseKind::Fst, LoadedResource::Fst(fst)) => {
            Box::new(FstPredictor::deterministic(Arc::clone(fst))?)
        }
        (BaseKind::Nfst, LoadedResource::Fst(fst)) => {
            Box::new(FstPredictor::nondeterministic(Arc::clone(fst), params.nfst_merge)?)
        }
        (BaseKind::Ngram, LoadedResource::Ngram(model)) => {
            Box::new(NgramPredictor::new(Arc::clone(model))?)
        }
        (BaseKind::Wc, LoadedResource::None) => Box::new(WordCountPredictor::new()),
        (BaseKind::Unkc, LoadedResource::None) => {
            Box::new(UnkCountPredictor::new(params.unkc_c0, params.unkc_c1))
        }
        (BaseKind::Length, LoadedResource::None) => Box::new(LengthPredictor::new(
            params.length_a,
            params.length_b,
            params.length_sigma,
        )?),
        (BaseKind::Forced, LoadedResource::Lines(lines)) => {
            Box::new(ForcedPredictor::new(lines.as_ref().clone())?)
        }
        (BaseKind::Bow, LoadedResource::Lines(lines)) => {
            Box::new(BagOfWordsPredictor::new(lines.as_ref().clone(), params.bow_repetition)?)
        }
        (BaseKind::Forcedlst, LoadedResource::Nbest(list)) => {
            let mode = if params.nbest_rescore { NbestMode::Rescore } else { NbestMode::AcceptOnly };
            Box::new(NbestPredictor::new(list, mode)?)
        }
        (BaseKind::Ngramc, LoadedResource::Table(table)) => {
            Box::new(NgramCountPredictor::new(table.as_ref().clone()))
        }
        _ => unreachable!("resource kind fixed by load_base_resource"),
    })
}

/// Largest label on any arc, over both tapes.
fn fst_max_label(fst: &WeightedFst) -> TokenId {
    let mut max = 0;
    for state in 0..fst.num_states() as u32 {
        for arc in fst.arcs(state) {
            max = max.max(arc.ilabel).max(arc.olabel);
        }
    }
    max
}
