//! Command line front end: flag parsing, the key=value configuration
//! file, and translation into a library `RunConfig`.
//!
//! Every long option may also appear as a `key=value` line in the file
//! named by `--config`; values given on the command line win. Exit
//! status is 0 when every sentence decoded, 1 when any sentence failed,
//! and 2 for configuration or resource errors.

use std::collections::{BTreeMap, VecDeque};
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;

use seqdec::decoders::DecoderKind;
use seqdec::predictors::LabelMerge;
use seqdec::runner::{run, OutputKind, PredictorSpec, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "seqdec", version, about = "Decode a corpus with a weighted predictor ensemble")]
struct Cli {
    /// key=value file supplying any long option; command-line values win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Comma-separated predictor constellation, e.g. "fst,ngram,wc".
    /// Prefix a name with "fsttok_" to wrap it in a tokenization
    /// transducer from --fsttok_path.
    #[arg(long, value_name = "NAMES")]
    predictors: Option<String>,

    /// Comma-separated weights pairing positionally with --predictors;
    /// default 1.0 each.
    #[arg(long, value_name = "WEIGHTS")]
    weights: Option<String>,

    /// Search strategy: greedy, beam, dfs, restarting, astar, sepbeam,
    /// syncbeam, or bucket.
    #[arg(long, value_name = "NAME")]
    decoder: Option<String>,

    /// Beam width; also caps the returned n-best list of any strategy.
    #[arg(long, value_name = "N")]
    beam: Option<usize>,

    /// Hard cap on hypothesis length (end symbol included); default is
    /// three times the source length.
    #[arg(long = "max_len", value_name = "N")]
    max_len: Option<usize>,

    /// Expansion budget for the exhaustive strategies.
    #[arg(long = "node_budget", value_name = "N")]
    node_budget: Option<u64>,

    /// Declare that every per-step score is <= 0, enabling admissible
    /// pruning against completed hypotheses.
    #[arg(long = "nonpositive_scores", num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    nonpositive_scores: Option<bool>,

    /// Token id at which the synchronized beam aligns hypotheses.
    #[arg(long = "sync_symbol", value_name = "ID")]
    sync_symbol: Option<u32>,

    /// Per-step bound for the best-first strategy's heuristic.
    #[arg(long = "astar_per_step", value_name = "SCORE", allow_hyphen_values = true)]
    astar_per_step: Option<f64>,

    /// Source corpus, one tokenized sentence per line.
    #[arg(long, value_name = "FILE")]
    input: Option<PathBuf>,

    /// "token<TAB>id" symbol table; without one, tokens are decimal ids.
    #[arg(long, value_name = "FILE")]
    symtab: Option<PathBuf>,

    /// Explicit vocabulary size; resources may still enlarge it.
    #[arg(long = "vocab_size", value_name = "N")]
    vocab_size: Option<u32>,

    /// Comma-separated output kinds: text, nbest.
    #[arg(long, value_name = "KINDS")]
    outputs: Option<String>,

    /// Output file path; %s is replaced by the output kind and is
    /// required when several kinds are selected. Default "out.%s".
    #[arg(long = "output_path", value_name = "PATTERN")]
    output_path: Option<String>,

    /// Parallel decoding workers.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,

    /// 1-based inclusive line range of the input to decode, "A:B".
    #[arg(long, value_name = "A:B")]
    range: Option<String>,

    /// Automata for the fst/nfst predictors, comma-separated, consumed
    /// in constellation order.
    #[arg(long = "fst_path", value_name = "FILES")]
    fst_path: Option<String>,

    /// ARPA language models for the ngram predictors.
    #[arg(long = "lm_path", value_name = "FILES")]
    lm_path: Option<String>,

    /// Reference files for the forced predictors, one sentence per line.
    #[arg(long = "forced_path", value_name = "FILES")]
    forced_path: Option<String>,

    /// N-best lists for the forcedlst predictors.
    #[arg(long = "nbest_path", value_name = "FILES")]
    nbest_path: Option<String>,

    /// Bag files for the bow predictors, one bag per line.
    #[arg(long = "bow_path", value_name = "FILES")]
    bow_path: Option<String>,

    /// Score tables for the ngramc predictors.
    #[arg(long = "ngramc_path", value_name = "FILES")]
    ngramc_path: Option<String>,

    /// Tokenization transducers for fsttok_-wrapped predictors.
    #[arg(long = "fsttok_path", value_name = "FILES")]
    fsttok_path: Option<String>,

    /// Unknown-word rate intercept: lambda = c0 + c1 * unknown sources.
    #[arg(long = "unkc_c0", value_name = "X", allow_hyphen_values = true)]
    unkc_c0: Option<f64>,

    /// Unknown-word rate slope.
    #[arg(long = "unkc_c1", value_name = "X", allow_hyphen_values = true)]
    unkc_c1: Option<f64>,

    /// Length model mean slope: mu = a * source length + b.
    #[arg(long = "length_a", value_name = "X", allow_hyphen_values = true)]
    length_a: Option<f64>,

    /// Length model mean intercept.
    #[arg(long = "length_b", value_name = "X", allow_hyphen_values = true)]
    length_b: Option<f64>,

    /// Length model standard deviation.
    #[arg(long = "length_sigma", value_name = "X")]
    length_sigma: Option<f64>,

    /// Allow bags of words to be emitted with repetitions.
    #[arg(long = "bow_repeat", num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    bow_repeat: Option<bool>,

    /// Score listed hypotheses with their stored totals instead of
    /// treating the n-best list as a pure constraint.
    #[arg(long = "forcedlst_rescore", num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    forcedlst_rescore: Option<bool>,

    /// How nfst merges equal-label arcs: max or logsum.
    #[arg(long = "nfst_merge", value_name = "RULE")]
    nfst_merge: Option<String>,
}

/// Long option names the configuration file may set.
const FILE_KEYS: [&str; 31] = [
    "predictors",
    "weights",
    "decoder",
    "beam",
    "max_len",
    "node_budget",
    "nonpositive_scores",
    "sync_symbol",
    "astar_per_step",
    "input",
    "symtab",
    "vocab_size",
    "outputs",
    "output_path",
    "workers",
    "range",
    "fst_path",
    "lm_path",
    "forced_path",
    "nbest_path",
    "bow_path",
    "ngramc_path",
    "fsttok_path",
    "unkc_c0",
    "unkc_c1",
    "length_a",
    "length_b",
    "length_sigma",
    "bow_repeat",
    "forcedlst_rescore",
    "nfst_merge",
];

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let cli = Cli::parse();
    let code = match execute(cli) {
        Ok(code) => code,
        Err(message) => {
            eprintln!("seqdec: {message}");
            2
        }
    };
    std::process::exit(code);
}

fn execute(cli: Cli) -> Result<i32, String> {
    let file = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| format!("cannot read config file {}: {e}", path.display()))?;
            parse_config_file(&text)?
        }
        None => BTreeMap::new(),
    };
    let config = build_run_config(cli, &file)?;
    run(&config).map_err(|e| e.to_string())
}

/// "key = value" lines; '#' starts a comment; keys must be known.
fn parse_config_file(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut map = BTreeMap::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("config file line {}: expected key=value", idx + 1))?;
        let (key, value) = (key.trim().to_string(), value.trim().to_string());
        if !FILE_KEYS.contains(&key.as_str()) {
            return Err(format!("config file line {}: unknown option '{key}'", idx + 1));
        }
        map.insert(key, value);
    }
    Ok(map)
}

/// The command-line value when given, else the config-file value.
fn pick<T: FromStr>(
    cli: Option<T>,
    file: &BTreeMap<String, String>,
    key: &str,
) -> Result<Option<T>, String>
where
    T::Err: std::fmt::Display,
{
    if cli.is_some() {
        return Ok(cli);
    }
    match file.get(key) {
        Some(raw) => raw
            .parse()
            .map(Some)
            .map_err(|e| format!("option '{key}': invalid value {raw:?}: {e}")),
        None => Ok(None),
    }
}

fn build_run_config(cli: Cli, file: &BTreeMap<String, String>) -> Result<RunConfig, String> {
    let input: PathBuf =
        pick(cli.input, file, "input")?.ok_or("missing required option --input")?;
    let mut config = RunConfig::new(input);

    if let Some(names) = pick(cli.decoder, file, "decoder")? {
        config.decoder = DecoderKind::from_name(&names).map_err(|e| e.to_string())?;
    }
    if let Some(beam) = pick(cli.beam, file, "beam")? {
        config.decoder_config.beam_size = beam;
    }
    config.decoder_config.max_len = pick(cli.max_len, file, "max_len")?;
    config.decoder_config.node_budget = pick(cli.node_budget, file, "node_budget")?;
    config.decoder_config.sync_symbol = pick(cli.sync_symbol, file, "sync_symbol")?;
    if let Some(flag) = pick(cli.nonpositive_scores, file, "nonpositive_scores")? {
        config.decoder_config.nonpositive_scores = flag;
    }
    config.astar_per_step = pick(cli.astar_per_step, file, "astar_per_step")?;
    config.symtab_path = pick(cli.symtab, file, "symtab")?;
    config.vocab_size = pick(cli.vocab_size, file, "vocab_size")?;
    if let Some(workers) = pick(cli.workers, file, "workers")? {
        config.workers = workers;
    }
    if let Some(range) = pick(cli.range, file, "range")? {
        config.range = Some(parse_range(&range)?);
    }
    if let Some(pattern) = pick(cli.output_path, file, "output_path")? {
        config.output_pattern = pattern;
    }
    if let Some(kinds) = pick(cli.outputs, file, "outputs")? {
        config.outputs = split_list(&kinds)
            .map(|k| OutputKind::from_name(k).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()?;
    }

    if let Some(c0) = pick(cli.unkc_c0, file, "unkc_c0")? {
        config.params.unkc_c0 = c0;
    }
    if let Some(c1) = pick(cli.unkc_c1, file, "unkc_c1")? {
        config.params.unkc_c1 = c1;
    }
    if let Some(a) = pick(cli.length_a, file, "length_a")? {
        config.params.length_a = a;
    }
    if let Some(b) = pick(cli.length_b, file, "length_b")? {
        config.params.length_b = b;
    }
    if let Some(sigma) = pick(cli.length_sigma, file, "length_sigma")? {
        config.params.length_sigma = sigma;
    }
    if let Some(repeat) = pick(cli.bow_repeat, file, "bow_repeat")? {
        config.params.bow_repetition = repeat;
    }
    if let Some(rescore) = pick(cli.forcedlst_rescore, file, "forcedlst_rescore")? {
        config.params.nbest_rescore = rescore;
    }
    if let Some(rule) = pick(cli.nfst_merge, file, "nfst_merge")? {
        config.params.nfst_merge = match rule.as_str() {
            "max" => LabelMerge::Max,
            "logsum" => LabelMerge::LogSum,
            other => return Err(format!("option 'nfst_merge': expected max or logsum, got {other:?}")),
        };
    }

    if let Some(weights) = pick(cli.weights, file, "weights")? {
        config.weights = split_list(&weights)
            .map(|w| {
                w.parse::<f64>()
                    .map_err(|_| format!("option 'weights': invalid weight {w:?}"))
            })
            .collect::<Result<_, _>>()?;
    }
    let names = pick(cli.predictors, file, "predictors")?.unwrap_or_default();
    config.predictors = assign_resources(
        &names,
        &[
            ("fst_path", pick(cli.fst_path, file, "fst_path")?),
            ("lm_path", pick(cli.lm_path, file, "lm_path")?),
            ("forced_path", pick(cli.forced_path, file, "forced_path")?),
            ("nbest_path", pick(cli.nbest_path, file, "nbest_path")?),
            ("bow_path", pick(cli.bow_path, file, "bow_path")?),
            ("ngramc_path", pick(cli.ngramc_path, file, "ngramc_path")?),
            ("fsttok_path", pick(cli.fsttok_path, file, "fsttok_path")?),
        ],
    )?;
    Ok(config)
}

/// The resource flag each predictor kind draws its file from.
fn resource_flag(base: &str) -> Option<&'static str> {
    match base {
        "fst" | "nfst" => Some("fst_path"),
        "ngram" => Some("lm_path"),
        "forced" => Some("forced_path"),
        "forcedlst" => Some("nbest_path"),
        "bow" => Some("bow_path"),
        "ngramc" => Some("ngramc_path"),
        "wc" | "unkc" | "length" => None,
        _ => None, // unknown names are reported by the engine
    }
}

fn known_base(base: &str) -> bool {
    matches!(
        base,
        "fst" | "nfst" | "ngram" | "forced" | "forcedlst" | "bow" | "ngramc" | "wc" | "unkc"
            | "length"
    )
}

/// Pairs each constellation name with the next file from its resource
/// flag, in order of appearance.
fn assign_resources(
    names: &str,
    path_flags: &[(&'static str, Option<String>)],
) -> Result<Vec<PredictorSpec>, String> {
    let mut queues: BTreeMap<&str, VecDeque<PathBuf>> = BTreeMap::new();
    for (flag, value) in path_flags {
        let queue = match value {
            Some(list) => split_list(list).map(PathBuf::from).collect(),
            None => VecDeque::new(),
        };
        queues.insert(flag, queue);
    }
    let mut pop = |flag: &str, name: &str| -> Result<PathBuf, String> {
        queues
            .get_mut(flag)
            .expect("every flag is seeded")
            .pop_front()
            .ok_or_else(|| format!("predictor '{name}' needs a file from --{flag}"))
    };

    let mut specs = Vec::new();
    let mut all_known = true;
    for name in split_list(names) {
        let mut spec = PredictorSpec::new(name);
        let base = name.strip_prefix("fsttok_").unwrap_or(name);
        if name.len() > base.len() {
            spec = spec.with_wrapper_path(pop("fsttok_path", name)?);
        }
        all_known &= known_base(base);
        if let Some(flag) = resource_flag(base) {
            spec = spec.with_path(pop(flag, name)?);
        }
        specs.push(spec);
    }
    if all_known {
        for (flag, queue) in &queues {
            if !queue.is_empty() {
                return Err(format!(
                    "--{flag} supplies {} unused file(s); the constellation consumes them in order",
                    queue.len()
                ));
            }
        }
    }
    Ok(specs)
}

fn split_list(list: &str) -> impl Iterator<Item = &str> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_range(range: &str) -> Result<(usize, usize), String> {
    let (a, b) = range
        .split_once(':')
        .ok_or_else(|| format!("option 'range': expected A:B, got {range:?}"))?;
    let a = a.trim().parse().map_err(|_| format!("option 'range': invalid start {a:?}"))?;
    let b = b.trim().parse().map_err(|_| format!("option 'range': invalid end {b:?}"))?;
    Ok((a, b))
}
