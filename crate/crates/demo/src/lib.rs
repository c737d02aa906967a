//! Browser bindings for the decoding engine: paste an automaton and an
//! optional language model, run a search strategy, and inspect the
//! results, the per-decoder comparison, or the step-for-step trace.
//!
//! Every operation takes plain text in the same file formats the CLI
//! reads (tab-separated arcs, ARPA) and returns JSON or plain text, so
//! the page needs no framework. The functions are ordinary Rust and are
//! exercised by host-side tests; `wasm-bindgen` exposes them unchanged
//! to the browser.

use serde::Serialize;
use wasm_bindgen::prelude::wasm_bindgen;

use seqdec::decoders::{build_decoder, BeamDecoder, DecoderConfig, DecoderKind, GreedyDecoder};
use seqdec::formats::{parse_arpa, parse_att_fst, render_tokens, SymbolTable};
use seqdec::predictors::{FstPredictor, LabelMerge, NgramPredictor, WordCountPredictor};
use seqdec::{Ensemble, Predictor, Slot, SourceSentence, SearchResult, Vocabulary, EOS_ID};

use std::sync::Arc;

#[derive(Serialize)]
struct HypothesisView {
    tokens: String,
    score: f64,
}

#[derive(Serialize)]
struct StatsView {
    expansions: u64,
    pruned: u64,
    restarts: u64,
    truncated: bool,
}

#[derive(Serialize)]
struct DecodeView {
    decoder: String,
    found: bool,
    nbest: Vec<HypothesisView>,
    stats: StatsView,
}

#[derive(Serialize)]
struct CompareRow {
    decoder: String,
    score: Option<f64>,
    tokens: Option<String>,
    expansions: u64,
    pruned: u64,
    error: Option<String>,
}

/// One slot per pasted artifact: the automaton always scores, the
/// language model and the token-count penalty only when given.
struct Setup {
    ensemble: Ensemble,
    slots: usize,
}

fn build_setup(
    fst_text: &str,
    arpa_text: &str,
    lm_weight: f64,
    count_weight: f64,
) -> Result<Setup, String> {
    let fst = Arc::new(parse_att_fst(fst_text).map_err(|e| format!("automaton: {e}"))?);

    let mut max_label = EOS_ID;
    for state in 0..fst.num_states() as u32 {
        for arc in fst.arcs(state) {
            max_label = max_label.max(arc.ilabel).max(arc.olabel);
        }
    }

    let fst_predictor =
        FstPredictor::nondeterministic(fst, LabelMerge::Max).map_err(|e| e.to_string())?;
    let mut slots = vec![Slot {
        predictor: Box::new(fst_predictor) as Box<dyn Predictor>,
        weight: 1.0,
    }];

    if !arpa_text.trim().is_empty() {
        let sym = SymbolTable::numeric();
        let model =
            Arc::new(parse_arpa(arpa_text, &sym).map_err(|e| format!("language model: {e}"))?);
        for token in model.tokens() {
            max_label = max_label.max(token);
        }
        let predictor = NgramPredictor::new(model).map_err(|e| e.to_string())?;
        slots.push(Slot { predictor: Box::new(predictor), weight: lm_weight });
    }
    if count_weight != 0.0 {
        slots.push(Slot {
            predictor: Box::new(WordCountPredictor::new()),
            weight: count_weight,
        });
    }

    let vocab = Vocabulary::new(max_label + 1).map_err(|e| e.to_string())?;
    let count = slots.len();
    let ensemble = Ensemble::new(slots, vocab).map_err(|e| e.to_string())?;
    Ok(Setup { ensemble, slots: count })
}

fn demo_source() -> SourceSentence {
    SourceSentence::new(vec![7, 7, 7]).expect("static source sentence")
}

fn demo_config(beam_size: usize, max_len: u32) -> DecoderConfig {
    DecoderConfig {
        beam_size: beam_size.max(1),
        max_len: (max_len > 0).then_some(max_len as usize),
        nonpositive_scores: false,
        ..DecoderConfig::default()
    }
}

fn view(kind: DecoderKind, result: &SearchResult) -> DecodeView {
    let sym = SymbolTable::numeric();
    DecodeView {
        decoder: kind.name().to_string(),
        found: !result.is_failure(),
        nbest: result
            .nbest
            .iter()
            .map(|h| HypothesisView {
                tokens: render_tokens(h.output_tokens(), &sym),
                score: h.score,
            })
            .collect(),
        stats: StatsView {
            expansions: result.stats.expansions,
            pruned: result.stats.pruned,
            restarts: result.stats.restarts,
            truncated: result.stats.truncated,
        },
    }
}

fn run_decode(
    fst_text: &str,
    arpa_text: &str,
    lm_weight: f64,
    count_weight: f64,
    decoder: &str,
    beam_size: usize,
    max_len: u32,
) -> Result<String, String> {
    let kind = DecoderKind::from_name(decoder).map_err(|e| e.to_string())?;
    let mut setup = build_setup(fst_text, arpa_text, lm_weight, count_weight)?;
    let mut dec = build_decoder(kind, demo_config(beam_size, max_len)).map_err(|e| e.to_string())?;
    let result = dec.decode(&mut setup.ensemble, &demo_source()).map_err(|e| e.to_string())?;
    serde_json::to_string_pretty(&view(kind, &result)).map_err(|e| e.to_string())
}

fn run_compare(
    fst_text: &str,
    arpa_text: &str,
    lm_weight: f64,
    count_weight: f64,
    beam_size: usize,
    max_len: u32,
) -> Result<String, String> {
    let slots = build_setup(fst_text, arpa_text, lm_weight, count_weight)?.slots;
    let sym = SymbolTable::numeric();
    let mut rows = Vec::new();
    for kind in DecoderKind::ALL {
        if kind == DecoderKind::Syncbeam {
            continue; // needs a synchronization symbol, not exposed here
        }
        if kind == DecoderKind::Sepbeam && slots < 2 {
            continue; // splits the beam by scoring system, so it needs several
        }
        let row = (|| -> Result<CompareRow, String> {
            let mut setup = build_setup(fst_text, arpa_text, lm_weight, count_weight)?;
            let mut dec =
                build_decoder(kind, demo_config(beam_size, max_len)).map_err(|e| e.to_string())?;
            let result =
                dec.decode(&mut setup.ensemble, &demo_source()).map_err(|e| e.to_string())?;
            Ok(CompareRow {
                decoder: kind.name().to_string(),
                score: result.best().map(|h| h.score),
                tokens: result.best().map(|h| render_tokens(h.output_tokens(), &sym)),
                expansions: result.stats.expansions,
                pruned: result.stats.pruned,
                error: None,
            })
        })()
        .unwrap_or_else(|error| CompareRow {
            decoder: kind.name().to_string(),
            score: None,
            tokens: None,
            expansions: 0,
            pruned: 0,
            error: Some(error),
        });
        rows.push(row);
    }
    serde_json::to_string_pretty(&rows).map_err(|e| e.to_string())
}

fn run_trace(
    fst_text: &str,
    decoder: &str,
    beam_size: usize,
    max_len: u32,
) -> Result<String, String> {
    let mut setup = build_setup(fst_text, "", 0.0, 0.0)?;
    let config = demo_config(beam_size, max_len);
    let mut trace = Vec::new();
    match decoder {
        "greedy" => {
            let mut dec = GreedyDecoder::new(config).map_err(|e| e.to_string())?;
            dec.decode_traced(&mut setup.ensemble, &demo_source(), &mut trace)
                .map_err(|e| e.to_string())?;
        }
        "beam" => {
            let mut dec = BeamDecoder::new(config).map_err(|e| e.to_string())?;
            dec.decode_traced(&mut setup.ensemble, &demo_source(), &mut trace)
                .map_err(|e| e.to_string())?;
        }
        other => return Err(format!("tracing supports greedy and beam, not '{other}'")),
    }
    let mut lines: Vec<String> = trace.iter().map(|e| e.render()).collect();
    lines.push(String::new());
    Ok(lines.join("\n"))
}

/// Runs one search strategy and returns the n-best list and search
/// statistics as JSON.
#[wasm_bindgen]
pub fn decode(
    fst_text: &str,
    arpa_text: &str,
    lm_weight: f64,
    count_weight: f64,
    decoder: &str,
    beam_size: usize,
    max_len: u32,
) -> Result<String, String> {
    run_decode(fst_text, arpa_text, lm_weight, count_weight, decoder, beam_size, max_len)
}

/// Runs every applicable search strategy on the same input and returns
/// one JSON row per strategy: best hypothesis, score, and search effort.
#[wasm_bindgen]
pub fn compare_decoders(
    fst_text: &str,
    arpa_text: &str,
    lm_weight: f64,
    count_weight: f64,
    beam_size: usize,
    max_len: u32,
) -> Result<String, String> {
    run_compare(fst_text, arpa_text, lm_weight, count_weight, beam_size, max_len)
}

/// Replays greedy or beam search over the pasted automaton and returns
/// the rendered event log, one predictor call per line.
#[wasm_bindgen]
pub fn trace_search(
    fst_text: &str,
    decoder: &str,
    beam_size: usize,
    max_len: u32,
) -> Result<String, String> {
    run_trace(fst_text, decoder, beam_size, max_len)
}
