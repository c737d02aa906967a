//! Shared fixtures for the integration suites: seeded random automata
//! and language models over a small vocabulary, plus an exhaustive
//! search oracle that drives predictors through their state contract
//! directly, bypassing the ensemble and every decoder.

#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqdec::decoders::DecoderConfig;
use seqdec::formats::{parse_arpa, parse_att_fst, NgramModel, SymbolTable, WeightedFst};
use seqdec::predictors::{FstPredictor, NgramPredictor, WordCountPredictor};
use seqdec::{
    Ensemble, Error, Predictor, Slot, SourceSentence, TokenId, Vocabulary, EOS_ID,
};

/// Surface tokens shared by the random fixtures; ids 0 through 2 are
/// reserved and never appear on an arc.
pub const SURFACE: [TokenId; 3] = [3, 4, 5];

/// Vocabulary size covering the surface tokens and the reserved ids.
pub const VOCAB: u32 = 6;

/// Three-path lattice whose locally best first token leads into an
/// expensive completion: token 4 then costs 10 more, token 5 reaches
/// the same final state for a total of 3, and token 3 ends immediately
/// for 5.
pub const GARDEN_FST: &str = "0\t1\t4\t4\t1.0\n\
     0\t2\t5\t5\t2.0\n\
     0\t3\t3\t3\t5.0\n\
     1\t3\t4\t4\t10.0\n\
     2\t3\t4\t4\t1.0\n\
     3\t0.0\n";

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn fst(text: &str) -> Arc<WeightedFst> {
    Arc::new(parse_att_fst(text).expect("fixture automaton"))
}

pub fn lm(text: &str) -> Arc<NgramModel> {
    Arc::new(parse_arpa(text, &SymbolTable::numeric()).expect("fixture model"))
}

pub fn source(tokens: &[TokenId]) -> SourceSentence {
    SourceSentence::new(tokens.to_vec()).unwrap()
}

/// Arc and final costs on a two-decimal grid in [0, 3], so the text
/// rendering is exact and round trips bit-for-bit.
fn cost(rng: &mut ChaCha8Rng) -> f64 {
    rng.gen_range(0..=300) as f64 / 100.0
}

/// Random deterministic automaton in text form: 4 to 10 states, at most
/// one arc per state and label, and one short accepting path planted
/// from the start state so most draws have a solution.
pub fn random_att_fst(rng: &mut ChaCha8Rng) -> String {
    let states: u32 = rng.gen_range(4..=10);
    let mut arcs: Vec<BTreeMap<TokenId, (u32, f64)>> = vec![BTreeMap::new(); states as usize];
    let mut finals: BTreeMap<u32, f64> = BTreeMap::new();

    let mut at = 0u32;
    for _ in 0..rng.gen_range(1..=3) {
        let label = SURFACE[rng.gen_range(0..SURFACE.len())];
        let dst = rng.gen_range(0..states);
        let planted = cost(rng);
        at = arcs[at as usize].entry(label).or_insert((dst, planted)).0;
    }
    finals.insert(at, cost(rng));

    for s in 0..states {
        for label in SURFACE {
            if rng.gen_bool(0.4) {
                let dst = rng.gen_range(0..states);
                let c = cost(rng);
                arcs[s as usize].entry(label).or_insert((dst, c));
            }
        }
        if rng.gen_bool(0.2) {
            let c = cost(rng);
            finals.entry(s).or_insert(c);
        }
    }

    // The text format demands contiguous state ids; park states the
    // draw never touched as unreachable finals.
    let mut mentioned: BTreeSet<u32> = finals.keys().copied().collect();
    for (s, out) in arcs.iter().enumerate() {
        if !out.is_empty() {
            mentioned.insert(s as u32);
        }
        mentioned.extend(out.values().map(|&(dst, _)| dst));
    }
    for s in 0..states {
        if !mentioned.contains(&s) {
            finals.insert(s, cost(rng));
        }
    }

    let mut out = String::new();
    for (s, by_label) in arcs.iter().enumerate() {
        for (&label, &(dst, c)) in by_label {
            writeln!(out, "{s}\t{dst}\t{label}\t{label}\t{c:.6}").expect("string write");
        }
    }
    for (&s, &c) in &finals {
        writeln!(out, "{s}\t{c:.6}").expect("string write");
    }
    out
}

/// Random 2-gram model in text form. All log10 scores lie in
/// [-2, -0.005] and backoffs in [-1, 0], so every natural-log score the
/// model can produce is nonpositive.
pub fn random_arpa(rng: &mut ChaCha8Rng, surface: &[&str]) -> String {
    fn logprob(rng: &mut ChaCha8Rng) -> f64 {
        -(rng.gen_range(5..=2000) as f64) / 1000.0
    }
    fn backoff(rng: &mut ChaCha8Rng) -> f64 {
        -(rng.gen_range(0..=1000) as f64) / 1000.0
    }

    let mut unigrams: Vec<String> = Vec::new();
    unigrams.push(format!("{:.6}\t<unk>\t{:.6}", logprob(rng), backoff(rng)));
    unigrams.push(format!("-99.000000\t<s>\t{:.6}", backoff(rng)));
    unigrams.push(format!("{:.6}\t</s>", logprob(rng)));
    for t in surface {
        unigrams.push(format!("{:.6}\t{t}\t{:.6}", logprob(rng), backoff(rng)));
    }

    let mut bigrams: Vec<String> = Vec::new();
    for h in std::iter::once(&"<s>").chain(surface) {
        for t in surface.iter().chain(std::iter::once(&"</s>")) {
            if rng.gen_bool(0.55) {
                bigrams.push(format!("{:.6}\t{h} {t}", logprob(rng)));
            }
        }
    }

    let mut out = String::from("\\data\\\n");
    writeln!(out, "ngram 1={}", unigrams.len()).expect("string write");
    writeln!(out, "ngram 2={}\n", bigrams.len()).expect("string write");
    out.push_str("\\1-grams:\n");
    for u in &unigrams {
        out.push_str(u);
        out.push('\n');
    }
    out.push_str("\n\\2-grams:\n");
    for b in &bigrams {
        out.push_str(b);
        out.push('\n');
    }
    out.push_str("\n\\end\\\n");
    out
}

/// One random scoring setup: an automaton constraint, a 2-gram model
/// and a token counter, with every combined score nonpositive.
pub struct ScoreSystem {
    pub fst_text: String,
    pub arpa_text: String,
    pub lm_weight: f64,
    pub count_weight: f64,
    pub max_len: usize,
    pub src: SourceSentence,
}

impl ScoreSystem {
    pub fn random(seed: u64) -> ScoreSystem {
        let mut r = rng(seed);
        let fst_text = random_att_fst(&mut r);
        let arpa_text = random_arpa(&mut r, &["3", "4", "5"]);
        ScoreSystem {
            fst_text,
            arpa_text,
            lm_weight: r.gen_range(0.2..=1.0),
            count_weight: -r.gen_range(0.0..=0.3),
            max_len: r.gen_range(3..=6),
            src: source(&[7, 7]),
        }
    }

    pub fn predictors(&self) -> (Vec<Box<dyn Predictor>>, Vec<f64>) {
        let predictors: Vec<Box<dyn Predictor>> = vec![
            Box::new(FstPredictor::deterministic(fst(&self.fst_text)).unwrap()),
            Box::new(NgramPredictor::new(lm(&self.arpa_text)).unwrap()),
            Box::new(WordCountPredictor::new()),
        ];
        (predictors, vec![1.0, self.lm_weight, self.count_weight])
    }

    pub fn ensemble(&self) -> Ensemble {
        let (predictors, weights) = self.predictors();
        let slots = predictors
            .into_iter()
            .zip(weights)
            .map(|(predictor, weight)| Slot { predictor, weight })
            .collect();
        Ensemble::new(slots, Vocabulary::new(VOCAB).unwrap()).unwrap()
    }

    pub fn config(&self, beam: usize) -> DecoderConfig {
        DecoderConfig {
            beam_size: beam,
            max_len: Some(self.max_len),
            nonpositive_scores: true,
            ..DecoderConfig::default()
        }
    }
}

/// Best complete score over every token sequence up to `max_len`,
/// found by depth-first enumeration. Candidate scores are recombined
/// here with a plain weighted sum so the oracle shares no combination
/// or search code with the engine; predictors are branched through
/// their snapshot contract.
pub fn exhaustive_best(
    predictors: &mut [Box<dyn Predictor>],
    weights: &[f64],
    vocab: u32,
    src: &SourceSentence,
    max_len: usize,
) -> Option<f64> {
    for p in predictors.iter_mut() {
        p.initialize(src).expect("oracle initialize");
    }
    let mut best = None;
    descend(predictors, weights, vocab, max_len, 0, 0.0, &mut best);
    best
}

fn descend(
    predictors: &mut [Box<dyn Predictor>],
    weights: &[f64],
    vocab: u32,
    max_len: usize,
    len: usize,
    acc: f64,
    best: &mut Option<f64>,
) {
    let mut posteriors = Vec::with_capacity(predictors.len());
    for p in predictors.iter_mut() {
        match p.predict_next() {
            Ok(post) => posteriors.push(post),
            Err(Error::DeadHypothesis) => return,
            Err(e) => panic!("oracle predict: {e}"),
        }
    }
    let saved: Vec<_> = predictors.iter().map(|p| p.get_state()).collect();
    for token in 0..vocab {
        let mut combined = 0.0;
        let mut impossible = false;
        for (post, w) in posteriors.iter().zip(weights) {
            let raw = post.score(token);
            if raw == f64::NEG_INFINITY {
                impossible = true;
                break;
            }
            combined += w * raw;
        }
        if impossible {
            continue;
        }
        let total = acc + combined;
        if token == EOS_ID {
            if len + 1 <= max_len && best.map_or(true, |b| total > b) {
                *best = Some(total);
            }
            continue;
        }
        if len + 1 >= max_len {
            continue; // no room left for the end symbol
        }
        for p in predictors.iter_mut() {
            p.consume(token).expect("oracle consume");
        }
        descend(predictors, weights, vocab, max_len, len + 1, total, best);
        for (p, s) in predictors.iter_mut().zip(&saved) {
            p.set_state(s).expect("oracle restore");
        }
    }
}
