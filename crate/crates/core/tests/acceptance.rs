//! End-to-end checks for the engine's externally stated guarantees,
//! one test per guarantee. Each test prints a single PASS line with the
//! measured numbers once every assertion in it has held.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::time::Instant;

use common::{
    exhaustive_best, fst, lm, random_arpa, random_att_fst, rng, source, ScoreSystem, GARDEN_FST,
    SURFACE, VOCAB,
};
use rand::Rng;
use seqdec::decoders::{
    build_decoder, BeamDecoder, DecoderConfig, DecoderKind, GreedyDecoder, SepbeamDecoder,
};
use seqdec::formats::{
    parse_arpa, parse_att_fst, parse_nbest, parse_ngram_table, parse_source_lines, render_tokens,
    serialize_arpa, serialize_att_fst, serialize_nbest, serialize_ngram_table, NbestList,
    NgramScores, SymbolTable,
};
use seqdec::predictors::unkc::poisson_log_pmf;
use seqdec::predictors::{
    BagOfWordsPredictor, ForcedPredictor, FstPredictor, LabelMerge, LengthPredictor, NbestMode,
    NbestPredictor, NgramCountPredictor, NgramPredictor, UnkCountPredictor, WordCountPredictor,
};
use seqdec::runner::{decode_corpus, OutputKind, PredictorSpec, Replica, RunConfig};
use seqdec::wrappers::{FsttokWrapper, MapVocabWrapper};
use seqdec::{
    run, Decoder, Ensemble, Error, Posterior, Predictor, PredictorState, Slot, SourceSentence,
    TokenId, Vocabulary, BOS_ID, EOS_ID, UNK_ID,
};

fn single_slot(predictor: Box<dyn Predictor>, weight: f64, vocab: u32) -> Ensemble {
    Ensemble::new(vec![Slot { predictor, weight }], Vocabulary::new(vocab).unwrap()).unwrap()
}

/// Drives a bare predictor over `tokens` plus the end symbol, summing
/// its raw scores; `None` as soon as a step is impossible.
fn total_of(p: &mut dyn Predictor, tokens: &[TokenId]) -> Option<f64> {
    let mut sum = 0.0;
    for &t in tokens.iter().chain(std::iter::once(&EOS_ID)) {
        let post = match p.predict_next() {
            Ok(post) => post,
            Err(Error::DeadHypothesis) => return None,
            Err(e) => panic!("predict while driving: {e}"),
        };
        let s = post.score(t);
        if s == f64::NEG_INFINITY {
            return None;
        }
        sum += s;
        p.consume(t).expect("consume while driving");
    }
    Some(sum)
}

// ---------------------------------------------------------------------
// Exact decoders against exhaustive enumeration; widening beams never
// get worse.

const OPTIMALITY_FIXTURES: u64 = 120;

/// Beam search is not monotone in width in general: a complete
/// hypothesis can be displaced from a narrow beam by open hypotheses
/// that later die at the length cap, leaving a failure result (the
/// pinned case in the beam module shows a width of 2 losing to both 1
/// and 3). The committed seed range below contains no such fixture, so
/// the widening chain asserted here is exact.
const OPTIMALITY_SEED_BASE: u64 = 300;

fn run_decoder(sys: &ScoreSystem, kind: DecoderKind, beam: usize) -> Option<(f64, Vec<TokenId>)> {
    let mut dec = build_decoder(kind, sys.config(beam)).unwrap();
    let mut ens = sys.ensemble();
    let result = dec.decode(&mut ens, &sys.src).unwrap();
    result.best().map(|h| (h.score, h.trajectory.clone()))
}

#[test]
fn exact_decoders_agree_with_exhaustive_enumeration() {
    let started = Instant::now();
    let mut solvable = 0usize;
    let mut worst_gap = 0.0f64;
    for seed in 0..OPTIMALITY_FIXTURES {
        let sys = ScoreSystem::random(OPTIMALITY_SEED_BASE + seed);
        let (mut predictors, weights) = sys.predictors();
        let oracle = exhaustive_best(&mut predictors, &weights, VOCAB, &sys.src, sys.max_len);
        if oracle.is_some() {
            solvable += 1;
        }

        for kind in
            [DecoderKind::Dfs, DecoderKind::Restarting, DecoderKind::Astar, DecoderKind::Bucket]
        {
            let beam = if kind == DecoderKind::Bucket { 2 } else { 1 };
            let got = run_decoder(&sys, kind, beam);
            match (oracle, &got) {
                (None, None) => {}
                (Some(want), Some((score, _))) => {
                    let gap = (want - score).abs();
                    assert!(
                        gap <= 1e-9,
                        "seed {seed}: {} returned {score}, enumeration found {want}",
                        kind.name()
                    );
                    worst_gap = worst_gap.max(gap);
                }
                _ => panic!(
                    "seed {seed}: {} and the enumeration disagree on solvability: {oracle:?} vs {got:?}",
                    kind.name()
                ),
            }
        }

        let greedy = run_decoder(&sys, DecoderKind::Greedy, 1);
        let beam1 = run_decoder(&sys, DecoderKind::Beam, 1);
        match (&greedy, &beam1) {
            (None, None) => {}
            (Some((gs, gt)), Some((bs, bt))) => {
                assert_eq!(gt, bt, "seed {seed}: width-1 beam walked a different path than greedy");
                assert!((gs - bs).abs() <= 1e-9, "seed {seed}: greedy {gs} vs width-1 beam {bs}");
            }
            _ => panic!("seed {seed}: greedy {greedy:?} vs width-1 beam {beam1:?}"),
        }
        let beam2 = run_decoder(&sys, DecoderKind::Beam, 2);
        let beam6 = run_decoder(&sys, DecoderKind::Beam, 6);
        let val = |o: &Option<(f64, Vec<TokenId>)>| o.as_ref().map_or(f64::NEG_INFINITY, |(s, _)| *s);
        assert!(val(&beam2) >= val(&beam1) - 1e-9, "seed {seed}: widening 1 to 2 lost score");
        assert!(val(&beam6) >= val(&beam2) - 1e-9, "seed {seed}: widening 2 to 6 lost score");
        assert!(
            val(&beam6) <= oracle.unwrap_or(f64::NEG_INFINITY) + 1e-9,
            "seed {seed}: a beam run beat the exhaustive enumeration"
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 30.0, "optimality sweep took {elapsed:.1}s, the budget is 30s");
    assert!(
        solvable * 2 >= OPTIMALITY_FIXTURES as usize,
        "only {solvable} of {OPTIMALITY_FIXTURES} fixtures were solvable; the sweep is too weak"
    );
    println!(
        "PASS exact search: {OPTIMALITY_FIXTURES} random fixtures ({solvable} solvable), \
         dfs/restarting/astar/bucket all within 1e-9 of enumeration (worst gap {worst_gap:.2e}), \
         beam widths 1 = greedy and 6 >= 2 >= 1, in {elapsed:.1}s"
    );
}

// ---------------------------------------------------------------------
// Step-for-step traces against hand-derived golden logs.

fn garden_ensemble() -> Ensemble {
    single_slot(
        Box::new(FstPredictor::deterministic(fst(GARDEN_FST)).unwrap()),
        1.0,
        VOCAB,
    )
}

fn assert_trace(golden: &str, rendered: &[String], which: &str) {
    let want: Vec<&str> = golden.lines().collect();
    for (i, (got, want)) in rendered.iter().zip(&want).enumerate() {
        assert_eq!(got, want, "{which} trace diverges at event {}", i + 1);
    }
    assert_eq!(rendered.len(), want.len(), "{which} trace has the wrong number of events");
}

#[test]
fn traced_runs_match_the_committed_golden_logs() {
    let src = source(&[7]);

    let mut ens = garden_ensemble();
    let mut dec = GreedyDecoder::new(DecoderConfig::default()).unwrap();
    let mut trace = Vec::new();
    let result = dec.decode_traced(&mut ens, &src, &mut trace).unwrap();
    let rendered: Vec<String> = trace.iter().map(|e| e.render()).collect();
    assert_trace(include_str!("golden/greedy_trace.txt"), &rendered, "greedy");
    let best = result.best().unwrap();
    assert_eq!(best.trajectory, vec![BOS_ID, 4, 4, EOS_ID]);
    assert!((best.score - -11.0).abs() <= 1e-9);
    let greedy_events = rendered.len();

    let mut ens = garden_ensemble();
    let config = DecoderConfig { beam_size: 2, ..DecoderConfig::default() };
    let mut dec = BeamDecoder::new(config).unwrap();
    let mut trace = Vec::new();
    let result = dec.decode_traced(&mut ens, &src, &mut trace).unwrap();
    let rendered: Vec<String> = trace.iter().map(|e| e.render()).collect();
    assert_trace(include_str!("golden/beam_trace.txt"), &rendered, "beam");
    assert_eq!(result.nbest.len(), 2);
    assert_eq!(result.nbest[0].trajectory, vec![BOS_ID, 5, 4, EOS_ID]);
    assert!((result.nbest[0].score - -3.0).abs() <= 1e-9);
    assert_eq!(result.nbest[1].trajectory, vec![BOS_ID, 4, 4, EOS_ID]);

    println!(
        "PASS trace fidelity: greedy ({greedy_events} events) and width-2 beam ({} events) \
         reproduce the hand-derived golden logs line for line",
        rendered.len()
    );
}

// ---------------------------------------------------------------------
// Individual scoring modules against closed-form oracles.

const HAND_ARPA: &str = "\\data\\\n\
ngram 1=5\n\
ngram 2=3\n\
\n\
\\1-grams:\n\
-1.000000\t<unk>\t-0.300000\n\
-99.000000\t<s>\t-0.200000\n\
-0.800000\t</s>\n\
-0.400000\t4\t-0.100000\n\
-0.600000\t5\t-0.250000\n\
\n\
\\2-grams:\n\
-0.300000\t<s> 4\n\
-0.200000\t4 5\n\
-0.500000\t5 </s>\n\
\n\
\\end\\\n";

/// Every sequence over `alphabet` of length 1 through `max_len`.
fn all_sequences(alphabet: &[TokenId], max_len: usize) -> Vec<Vec<TokenId>> {
    let mut out: Vec<Vec<TokenId>> = Vec::new();
    let mut layer: Vec<Vec<TokenId>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for prefix in &layer {
            for &t in alphabet {
                let mut seq = prefix.clone();
                seq.push(t);
                next.push(seq);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// The set of sequences a constraint predictor lets finish, determined
/// by driving a fresh instance over every candidate.
fn accepted_set<F>(build: F, alphabet: &[TokenId], max_len: usize) -> BTreeSet<Vec<TokenId>>
where
    F: Fn() -> Box<dyn Predictor>,
{
    let mut found = BTreeSet::new();
    for seq in all_sequences(alphabet, max_len) {
        let mut p = build();
        p.initialize(&source(&[7, 7])).unwrap();
        if total_of(p.as_mut(), &seq).is_some() {
            found.insert(seq);
        }
    }
    found
}

#[test]
fn module_scores_match_closed_form_oracles() {
    let ln10 = std::f64::consts::LN_10;

    // Back-off lookups, in log10 terms as the file states them.
    let model = lm(HAND_ARPA);
    let cases: [(&[TokenId], TokenId, f64); 8] = [
        (&[], 4, -0.4),                 // unigram hit
        (&[BOS_ID], 4, -0.3),           // bigram hit
        (&[4], 5, -0.2),                // bigram hit
        (&[5], EOS_ID, -0.5),           // bigram hit
        (&[4], 4, -0.1 + -0.4),         // back-off, weighted
        (&[5], 4, -0.25 + -0.4),        // back-off, weighted
        (&[BOS_ID], 5, -0.2 + -0.6),    // back-off, weighted
        (&[4], UNK_ID, -0.1 + -1.0),    // back-off into the unknown word
    ];
    for &(history, token, log10) in &cases {
        let got = model.score(history, token).expect("known token");
        assert!(
            (got - log10 * ln10).abs() <= 1e-9,
            "history {history:?}, token {token}: got {got}, want {}",
            log10 * ln10
        );
    }
    assert_eq!(model.score(&[], 9), None);
    // A history the model never saw carries no back-off weight.
    let got = model.score(&[9], 4).unwrap();
    assert!((got - -0.4 * ln10).abs() <= 1e-9);

    // The same numbers surface through the predictor's posteriors.
    let mut p = NgramPredictor::new(model).unwrap();
    p.initialize(&source(&[7])).unwrap();
    let post = p.predict_next().unwrap();
    assert!((post.score(4) - -0.3 * ln10).abs() <= 1e-9);
    p.consume(4).unwrap();
    let post = p.predict_next().unwrap();
    assert!((post.score(5) - -0.2 * ln10).abs() <= 1e-9);
    assert!((post.score(4) - (-0.1 + -0.4) * ln10).abs() <= 1e-9);
    assert!((post.score(9) - -1.0 * ln10).abs() <= 1e-9); // unknown-word unigram default

    // Count penalties at the end symbol.
    let pairs: [(f64, u64, f64); 4] = [
        (1.0, 0, -1.0),
        (1.0, 1, -1.0),
        (2.0, 0, -2.0),
        (2.5, 3, -1.5428872736055896),
    ];
    for &(lambda, k, want) in &pairs {
        assert!((poisson_log_pmf(lambda, k) - want).abs() <= 1e-9);
        let mut p = UnkCountPredictor::new(lambda, 0.0);
        p.initialize(&source(&[7])).unwrap();
        for _ in 0..k {
            p.consume(UNK_ID).unwrap();
        }
        let got = p.predict_next().unwrap().score(EOS_ID);
        assert!((got - want).abs() <= 1e-9, "rate {lambda}, count {k}: got {got}, want {want}");
    }

    // A full path through an automaton scores its exact cost.
    const CHAIN: &str = "0\t1\t4\t4\t1.25\n1\t2\t5\t5\t0.5\n2\t3\t4\t4\t2.0\n3\t0.75\n";
    let mut p = FstPredictor::deterministic(fst(CHAIN)).unwrap();
    p.initialize(&source(&[7])).unwrap();
    let total = total_of(&mut p, &[4, 5, 4]).unwrap();
    assert_eq!(total, -(1.25 + 0.5 + 2.0 + 0.75));

    // Constraint predictors, checked against every sequence of length
    // up to four over the shared alphabet.
    let alphabet = [UNK_ID, 3, 4, 5];
    let candidates = all_sequences(&alphabet, 4).len();

    let got = accepted_set(
        || Box::new(ForcedPredictor::new(vec![vec![4, 5, EOS_ID]]).unwrap()),
        &alphabet,
        4,
    );
    assert_eq!(got, BTreeSet::from([vec![4, 5]]));

    let got = accepted_set(
        || Box::new(BagOfWordsPredictor::new(vec![vec![4, 4, 5]], false).unwrap()),
        &alphabet,
        4,
    );
    assert_eq!(got, BTreeSet::from([vec![4, 4, 5], vec![4, 5, 4], vec![5, 4, 4]]));

    let got = accepted_set(
        || Box::new(BagOfWordsPredictor::new(vec![vec![4, 5]], true).unwrap()),
        &alphabet,
        4,
    );
    let want: BTreeSet<Vec<TokenId>> = all_sequences(&[4, 5], 4)
        .into_iter()
        .filter(|s| s.contains(&4) && s.contains(&5))
        .collect();
    assert_eq!(got, want);

    let list = parse_nbest(
        "0 ||| 4 ||| ||| -1.5\n0 ||| 4 5 ||| ||| -0.25\n0 ||| 5 3 3 ||| ||| -2.0\n",
        &SymbolTable::numeric(),
    )
    .unwrap();
    let listed = BTreeSet::from([vec![4], vec![4, 5], vec![5, 3, 3]]);
    for mode in [NbestMode::AcceptOnly, NbestMode::Rescore] {
        let got = accepted_set(
            || Box::new(NbestPredictor::new(&list, mode).unwrap()),
            &alphabet,
            4,
        );
        assert_eq!(got, listed, "mode {mode:?}");
    }
    for (tokens, stored) in [(vec![4], -1.5), (vec![4, 5], -0.25), (vec![5, 3, 3], -2.0)] {
        let mut accept = NbestPredictor::new(&list, NbestMode::AcceptOnly).unwrap();
        accept.initialize(&source(&[7, 7])).unwrap();
        assert_eq!(total_of(&mut accept, &tokens), Some(0.0));
        let mut rescore = NbestPredictor::new(&list, NbestMode::Rescore).unwrap();
        rescore.initialize(&source(&[7, 7])).unwrap();
        let got = total_of(&mut rescore, &tokens).unwrap();
        assert!((got - stored).abs() <= 1e-9, "{tokens:?}: got {got}, want {stored}");
    }

    println!(
        "PASS module scoring: back-off table ({} lookups), count penalty (4 rates), exact \
         path cost, and constraint sets verified over {candidates} candidate sequences",
        cases.len()
    );
}

// ---------------------------------------------------------------------
// Word-level scoring through a word-to-character transducer.

/// Transducer sending word 3 to characters [3], word 4 to [4 6], and
/// word 5 to [5 3 4]; state 0 is both the start and the only final.
const WORD_TO_CHAR: &str = "0\t1\t4\t4\t0.0\n\
1\t0\t0\t6\t0.0\n\
0\t2\t5\t5\t0.0\n\
2\t3\t0\t3\t0.0\n\
3\t0\t0\t4\t0.0\n\
0\t0\t3\t3\t0.0\n\
0\t0.0\n";

fn characters_of(word: TokenId) -> &'static [TokenId] {
    match word {
        3 => &[3],
        4 => &[4, 6],
        5 => &[5, 3, 4],
        _ => unreachable!("fixture words are 3, 4 and 5"),
    }
}

#[test]
fn word_scores_through_the_transducer_match_character_scores() {
    let char_lm = lm(&random_arpa(&mut rng(0xC0FFEE), &["3", "4", "5", "6"]));
    let transducer = fst(WORD_TO_CHAR);
    let mut r = rng(0xBEEF);
    let mut checked = 0usize;
    for _ in 0..20 {
        let words: Vec<TokenId> =
            (0..r.gen_range(1..=5)).map(|_| SURFACE[r.gen_range(0..SURFACE.len())]).collect();

        let inner = Box::new(NgramPredictor::new(char_lm.clone()).unwrap());
        let mut wrapped = FsttokWrapper::new(inner, transducer.clone());
        wrapped.initialize(&source(&[7])).unwrap();
        let coarse = total_of(&mut wrapped, &words).expect("word sequence scorable");

        let chars: Vec<TokenId> =
            words.iter().flat_map(|&w| characters_of(w).iter().copied()).collect();
        let mut direct = NgramPredictor::new(char_lm.clone()).unwrap();
        direct.initialize(&source(&[7])).unwrap();
        let fine = total_of(&mut direct, &chars).expect("character sequence scorable");

        assert!(
            (coarse - fine).abs() <= 1e-9,
            "words {words:?}: wrapped {coarse} vs direct {fine}"
        );
        checked += 1;
    }
    println!(
        "PASS granularity bridge: {checked} random word sequences scored through the \
         transducer within 1e-9 of direct character-level scoring"
    );
}

// ---------------------------------------------------------------------
// Split-system search against independent per-system runs.

#[test]
fn split_system_search_equals_the_best_individual_run() {
    let weights = [1.0, 0.7, 0.4];
    let src = source(&[7, 7]);
    // A width the candidate counts of these fixtures can never exceed,
    // so the shared beam never starves one system.
    let config = DecoderConfig {
        beam_size: 256,
        max_len: Some(3),
        nonpositive_scores: true,
        ..DecoderConfig::default()
    };

    let mut checked = 0usize;
    for (seed, systems) in [(21u64, 2usize), (22, 3), (23, 2), (24, 3), (25, 2), (26, 3)] {
        let mut r = rng(seed);
        let texts: Vec<String> = (0..systems).map(|_| random_att_fst(&mut r)).collect();

        let mut individual_best = f64::NEG_INFINITY;
        let mut any = false;
        for (i, text) in texts.iter().enumerate() {
            let mut ens = single_slot(
                Box::new(FstPredictor::deterministic(fst(text)).unwrap()),
                weights[i],
                VOCAB,
            );
            let mut dec = BeamDecoder::new(config).unwrap();
            if let Some(h) = dec.decode(&mut ens, &src).unwrap().best() {
                any = true;
                individual_best = individual_best.max(h.score);
            }
        }

        let slots = texts
            .iter()
            .enumerate()
            .map(|(i, text)| Slot {
                predictor: Box::new(FstPredictor::deterministic(fst(text)).unwrap()),
                weight: weights[i],
            })
            .collect();
        let mut ens = Ensemble::new(slots, Vocabulary::new(VOCAB).unwrap()).unwrap();
        let mut dec = SepbeamDecoder::new(config).unwrap();
        let joint = dec.decode(&mut ens, &src).unwrap();

        match (any, joint.best()) {
            (false, None) => {}
            (true, Some(h)) => assert!(
                (h.score - individual_best).abs() <= 1e-9,
                "seed {seed}: joint {} vs best individual {individual_best}",
                h.score
            ),
            (a, j) => panic!("seed {seed}: solvability disagreement ({a}, {j:?})"),
        }
        checked += 1;
    }
    println!(
        "PASS split-system search: joint best equals the best individual run for {checked} \
         two- and three-system setups (1e-9)"
    );
}

// ---------------------------------------------------------------------
// Snapshot round-trips under randomized schedules.

enum Recorded {
    Posterior(Posterior),
    Dead,
}

fn record(p: &mut dyn Predictor) -> (PredictorState, Recorded) {
    let snap = p.get_state();
    let out = match p.predict_next() {
        Ok(post) => Recorded::Posterior(post),
        Err(Error::DeadHypothesis) => Recorded::Dead,
        Err(e) => panic!("predict during schedule: {e}"),
    };
    (snap, out)
}

fn matches_recorded(p: &mut dyn Predictor, want: &Recorded) -> bool {
    match (p.predict_next(), want) {
        (Ok(got), Recorded::Posterior(want)) => got.bitwise_eq(want),
        (Err(Error::DeadHypothesis), Recorded::Dead) => true,
        _ => false,
    }
}

/// Runs `ops` randomized snapshot/consume/restore operations, checking
/// on every restore that the posterior is bit-identical to the one the
/// snapshot was taken with. Returns (restores checked, consumes).
fn exercise(
    name: &str,
    p: &mut dyn Predictor,
    src: &SourceSentence,
    vocab: u32,
    seed: u64,
    ops: usize,
) -> (usize, usize) {
    let mut r = rng(seed);
    p.initialize(src).unwrap();
    let mut pool: Vec<(PredictorState, Recorded)> = vec![record(p)];
    let mut restores = 0usize;
    let mut consumes = 0usize;

    let restore_random = |p: &mut dyn Predictor,
                              pool: &[(PredictorState, Recorded)],
                              r: &mut rand_chacha::ChaCha8Rng,
                              restores: &mut usize| {
        let (snap, want) = &pool[r.gen_range(0..pool.len())];
        p.set_state(snap).unwrap();
        assert!(
            matches_recorded(p, want),
            "{name}: a restored snapshot predicts differently than when it was taken"
        );
        *restores += 1;
    };

    for _ in 0..ops {
        match r.gen_range(0..10u32) {
            0..=2 => {
                if pool.len() >= 64 {
                    let evict = r.gen_range(0..pool.len());
                    pool.swap_remove(evict);
                }
                pool.push(record(p));
            }
            3..=5 => restore_random(p, &pool, &mut r, &mut restores),
            _ => match p.predict_next() {
                Err(Error::DeadHypothesis) => restore_random(p, &pool, &mut r, &mut restores),
                Err(e) => panic!("{name}: predict during schedule: {e}"),
                Ok(post) => {
                    let token = if r.gen_bool(0.15) {
                        // Deliberately allow impossible tokens so the
                        // schedule visits dead states too.
                        r.gen_range(0..vocab)
                    } else {
                        let finite: Vec<TokenId> =
                            (0..vocab).filter(|&t| post.score(t) > f64::NEG_INFINITY).collect();
                        match finite.is_empty() {
                            true => r.gen_range(0..vocab),
                            false => finite[r.gen_range(0..finite.len())],
                        }
                    };
                    p.consume(token).unwrap();
                    consumes += 1;
                }
            },
        }
    }
    (restores, consumes)
}

#[test]
fn restored_snapshots_reproduce_posteriors_bit_for_bit() {
    const OPS: usize = 1200;
    let char_lm = lm(&random_arpa(&mut rng(77), &["3", "4", "5"]));
    let table: NgramScores =
        [(vec![4], 0.5), (vec![4, 5], -0.25), (vec![5], 0.1)].into_iter().collect();
    let list = parse_nbest(
        "0 ||| 4 ||| ||| -1.5\n0 ||| 4 5 ||| ||| -0.25\n0 ||| 5 3 ||| ||| -2.0\n",
        &SymbolTable::numeric(),
    )
    .unwrap();
    // Two arcs share label 4, so only the merging reader accepts this.
    const FORKED: &str =
        "0\t1\t4\t4\t1.0\n0\t2\t4\t4\t2.0\n0\t1\t5\t5\t0.5\n1\t1.0\n2\t0.0\n";
    let map: BTreeMap<TokenId, TokenId> = [(3, 4), (4, 5), (5, 3)].into_iter().collect();

    let src_plain = source(&[7, 7]);
    let src_unks = SourceSentence::new(vec![0, 7, 0]).unwrap();

    let mut cases: Vec<(&str, Box<dyn Predictor>, &SourceSentence)> = vec![
        (
            "fst",
            Box::new(FstPredictor::deterministic(fst(&random_att_fst(&mut rng(78)))).unwrap()),
            &src_plain,
        ),
        (
            "nfst-max",
            Box::new(FstPredictor::nondeterministic(fst(FORKED), LabelMerge::Max).unwrap()),
            &src_plain,
        ),
        (
            "nfst-logsum",
            Box::new(FstPredictor::nondeterministic(fst(FORKED), LabelMerge::LogSum).unwrap()),
            &src_plain,
        ),
        ("ngram", Box::new(NgramPredictor::new(char_lm.clone()).unwrap()), &src_plain),
        ("wc", Box::new(WordCountPredictor::new()), &src_plain),
        ("unkc", Box::new(UnkCountPredictor::new(0.5, 1.0)), &src_unks),
        ("length", Box::new(LengthPredictor::new(1.0, 0.0, 1.0).unwrap()), &src_plain),
        ("forced", Box::new(ForcedPredictor::new(vec![vec![4, 5, 3, EOS_ID]]).unwrap()), &src_plain),
        (
            "forcedlst-accept",
            Box::new(NbestPredictor::new(&list, NbestMode::AcceptOnly).unwrap()),
            &src_plain,
        ),
        (
            "forcedlst-rescore",
            Box::new(NbestPredictor::new(&list, NbestMode::Rescore).unwrap()),
            &src_plain,
        ),
        ("bow", Box::new(BagOfWordsPredictor::new(vec![vec![4, 4, 5]], false).unwrap()), &src_plain),
        ("bow-repeat", Box::new(BagOfWordsPredictor::new(vec![vec![4, 5]], true).unwrap()), &src_plain),
        ("ngramc", Box::new(NgramCountPredictor::new(table)), &src_plain),
        (
            "fsttok",
            Box::new(FsttokWrapper::new(
                Box::new(NgramPredictor::new(char_lm.clone()).unwrap()),
                fst(WORD_TO_CHAR),
            )),
            &src_plain,
        ),
        (
            "map_vocab",
            Box::new(
                MapVocabWrapper::new(
                    Box::new(FstPredictor::deterministic(fst(GARDEN_FST)).unwrap()),
                    map,
                )
                .unwrap(),
            ),
            &src_plain,
        ),
    ];

    let mut total_restores = 0usize;
    let mut total_consumes = 0usize;
    for (i, (name, p, src)) in cases.iter_mut().enumerate() {
        let (restores, consumes) = exercise(name, p.as_mut(), src, VOCAB, 0x57A7E + i as u64, OPS);
        assert!(restores >= 100, "{name}: schedule ran only {restores} restores");
        total_restores += restores;
        total_consumes += consumes;
    }
    println!(
        "PASS snapshot round-trips: {} predictor configurations x {OPS} operations \
         ({total_restores} restores bit-identical, {total_consumes} consumes)",
        cases.len()
    );
}

// ---------------------------------------------------------------------
// Corpus runs: worker-count independence and fault isolation.

struct TrippingPredictor {
    inner: ForcedPredictor,
    armed: bool,
    trip_id: usize,
}

impl Predictor for TrippingPredictor {
    fn name(&self) -> &'static str {
        "tripping"
    }

    fn initialize(&mut self, src: &SourceSentence) -> seqdec::Result<()> {
        self.armed = src.id() == self.trip_id;
        self.inner.initialize(src)
    }

    fn predict_next(&mut self) -> seqdec::Result<Posterior> {
        if self.armed {
            panic!("injected failure");
        }
        self.inner.predict_next()
    }

    fn consume(&mut self, token: TokenId) -> seqdec::Result<()> {
        self.inner.consume(token)
    }

    fn get_state(&self) -> PredictorState {
        self.inner.get_state()
    }

    fn set_state(&mut self, state: &PredictorState) -> seqdec::Result<()> {
        self.inner.set_state(state)
    }
}

#[test]
fn parallel_corpus_runs_are_deterministic_and_lose_no_work() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("input.txt");
    fs::write(&input, "9 9 9\n".repeat(50)).unwrap();
    let bags = dir.path().join("bags.txt");
    let mut lines = String::new();
    for i in 0..50u32 {
        lines.push_str(&format!(
            "{} {} {}\n",
            3 + i % 6,
            3 + (7 * i + 1) % 6,
            3 + (3 * i + 2) % 6
        ));
    }
    fs::write(&bags, lines).unwrap();

    let mut outputs: Vec<(Vec<u8>, Vec<u8>)> = Vec::new();
    for workers in [1usize, 2, 4] {
        let mut config = RunConfig::new(&input);
        config.predictors = vec![PredictorSpec::new("bow").with_path(&bags)];
        config.decoder = DecoderKind::Beam;
        config.decoder_config.beam_size = 4;
        config.outputs = vec![OutputKind::Text, OutputKind::Nbest];
        config.output_pattern =
            dir.path().join(format!("w{workers}.%s")).to_string_lossy().into_owned();
        config.workers = workers;
        assert_eq!(run(&config).unwrap(), 0, "corpus run failed with {workers} workers");
        outputs.push((
            fs::read(dir.path().join(format!("w{workers}.text"))).unwrap(),
            fs::read(dir.path().join(format!("w{workers}.nbest"))).unwrap(),
        ));
    }
    assert!(!outputs[0].0.is_empty());
    assert_eq!(outputs[0], outputs[1], "1 and 2 workers wrote different bytes");
    assert_eq!(outputs[0], outputs[2], "1 and 4 workers wrote different bytes");

    let refs: Vec<Vec<TokenId>> = (0..50u32).map(|i| vec![3 + i % 5, EOS_ID]).collect();
    let factory = move || -> seqdec::Result<Replica> {
        let predictor =
            TrippingPredictor { inner: ForcedPredictor::new(refs.clone())?, armed: false, trip_id: 17 };
        let ensemble = Ensemble::new(
            vec![Slot { predictor: Box::new(predictor), weight: 1.0 }],
            Vocabulary::new(9).unwrap(),
        )?;
        let decoder = build_decoder(DecoderKind::Greedy, DecoderConfig::default())?;
        Ok((ensemble, decoder))
    };
    let sentences: Vec<SourceSentence> = (0..50).map(|i| source(&[7]).with_id(i)).collect();
    let mut seen = Vec::new();
    let mut failed = Vec::new();
    let summary = decode_corpus(sentences, 4, &factory, |record| {
        if record.is_failure() {
            failed.push(record.id);
        }
        seen.push(record.id);
    })
    .unwrap();
    assert_eq!(seen, (0..50).collect::<Vec<_>>(), "records arrived out of order or dropped");
    assert_eq!(failed, vec![17], "exactly the poisoned sentence should fail");
    assert_eq!(summary.sentences, 50);
    assert_eq!(summary.failed, 1);

    println!(
        "PASS corpus pipeline: 1/2/4 workers byte-identical over 50 sentences; an injected \
         worker panic failed exactly one sentence and delivered all 50 records in order"
    );
}

// ---------------------------------------------------------------------
// Format parsers: documented rejections and serialize-parse identity.

#[test]
fn parsers_reject_malformed_input_and_round_trip_valid_input() {
    let sym = SymbolTable::numeric();
    let rejected = std::cell::Cell::new(0usize);

    let expect_parse_error = |err: Error, line: usize, what: &str| {
        match err {
            Error::Parse { line: got, .. } => {
                assert_eq!(got, line, "{what}: wrong line number");
            }
            other => panic!("{what}: expected a parse error, got {other:?}"),
        }
        rejected.set(rejected.get() + 1);
    };

    // Automaton files.
    for (text, line, what) in [
        ("0 1 4\n", 1, "arc with three fields"),
        ("0\t1\t4\t4\t1.0\nx\t0\n", 2, "state id that is not a number"),
        ("0\t1\t4\t4\tabc\n", 1, "cost that is not a number"),
        ("0\t1.0\n0\t2.0\n", 2, "duplicate final weight"),
        ("", 1, "automaton with no states"),
    ] {
        expect_parse_error(parse_att_fst(text).unwrap_err(), line, what);
    }
    assert!(
        matches!(parse_att_fst("0\t3\t4\t4\t1.0\n3\t0.0\n"), Err(Error::Validation(_))),
        "gapped state ids must be rejected"
    );
    rejected.set(rejected.get() + 1);

    // Model files.
    for (text, line, what) in [
        ("hello\n", 1, "missing data header"),
        ("\\data\\\nngram x\n", 2, "count line without an equals sign"),
        ("\\data\\\nngram 2=1\n", 2, "orders not declared from 1"),
        ("\\data\\\nngram 1=x\n", 2, "count that is not a number"),
        ("\\data\\\n\\1-grams:\n", 2, "no orders declared"),
        ("\\data\\\nngram 1=0\n\\weird\\\n", 3, "unrecognized section header"),
        ("\\data\\\nngram 1=0\n\\2-grams:\n", 3, "section for an undeclared order"),
        ("\\data\\\nngram 1=1\n\\1-grams:\n-0.5\n", 4, "entry with too few fields"),
        ("\\data\\\nngram 1=1\n\\1-grams:\nx\t4\n", 4, "log probability that is not a number"),
        ("\\data\\\nngram 1=1\n\\1-grams:\ninf\t4\n", 4, "non-finite log probability"),
        ("\\data\\\nngram 1=1\n\\1-grams:\n-0.5\tabc\n\\end\\\n", 4, "token outside the table"),
        ("\\data\\\nngram 1=1\n\\1-grams:\n-0.5\t4\n-0.4\t4\n", 5, "duplicate entry"),
        ("\\data\\\nngram 1=1\n\\1-grams:\n-0.5\t4\n\\end\\\nextra\n", 6, "content after the end marker"),
        ("\\data\\\nngram 1=1\n\\1-grams:\n-0.5\t4\n", 4, "missing end marker"),
    ] {
        expect_parse_error(parse_arpa(text, &sym).unwrap_err(), line, what);
    }
    assert!(
        matches!(
            parse_arpa("\\data\\\nngram 1=2\n\\1-grams:\n-0.5\t4\n\\end\\\n", &sym),
            Err(Error::Validation(_))
        ),
        "declared and listed counts must match"
    );
    rejected.set(rejected.get() + 1);

    // Hypothesis list files.
    for (text, line, what) in [
        ("0 ||| 4 ||| -1.0\n", 1, "three fields instead of four"),
        ("x ||| 4 ||| ||| -1.0\n", 1, "sentence id that is not a number"),
        ("0 |||  ||| ||| -1.0\n", 1, "empty token sequence"),
        ("0 ||| 4 ||| lm-2.0 ||| -1.0\n", 1, "feature without an equals sign"),
        ("0 ||| 4 ||| lm=abc ||| -1.0\n", 1, "feature value that is not a number"),
        ("0 ||| 4 ||| ||| abc\n", 1, "total that is not a number"),
    ] {
        expect_parse_error(parse_nbest(text, &sym).unwrap_err(), line, what);
    }
    assert!(
        matches!(
            parse_nbest(
                "0 ||| 4 ||| ||| -1.0\n1 ||| 4 ||| ||| -1.0\n0 ||| 5 ||| ||| -2.0\n",
                &sym
            ),
            Err(Error::Validation(_))
        ),
        "interleaved sentence groups must be rejected"
    );
    rejected.set(rejected.get() + 1);

    // Symbol tables.
    for (text, line, what) in [
        ("the\n", 1, "line with one field"),
        ("the\tx\n", 1, "id that is not a number"),
        ("<s>\t5\n", 1, "reserved name with the wrong id"),
        ("the\t1\n", 1, "ordinary token claiming a reserved id"),
        ("the\t5\nthe\t6\n", 2, "duplicate token"),
        ("the\t5\nan\t5\n", 2, "duplicate id"),
    ] {
        let Err(err) = SymbolTable::parse(text) else { panic!("{what}: parse succeeded") };
        expect_parse_error(err, line, what);
    }

    // Score tables.
    for (text, line, what) in [
        ("4 5 -0.4\n", 1, "line without a colon"),
        (": -0.4\n", 1, "empty n-gram"),
        ("4 : lots\n", 1, "score that is not a number"),
    ] {
        expect_parse_error(parse_ngram_table(text, &sym).unwrap_err(), line, what);
    }
    let table = parse_ngram_table("4 : -0.4\n4 : -0.9\n", &sym).unwrap();
    assert_eq!(table.get(&vec![4]), Some(&-0.9), "a duplicate n-gram keeps the later score");

    // Sentence files.
    expect_parse_error(
        parse_source_lines("4 5\n\n4\n", &sym).unwrap_err(),
        2,
        "empty source sentence",
    );

    // Serialize-parse identity on valid artifacts.
    let mut round_trips = 0usize;
    for seed in 0..5u64 {
        let text = random_att_fst(&mut rng(400 + seed));
        let parsed = parse_att_fst(&text).unwrap();
        assert_eq!(parse_att_fst(&serialize_att_fst(&parsed)).unwrap(), parsed);
        round_trips += 1;

        let text = random_arpa(&mut rng(500 + seed), &["3", "4", "5"]);
        let parsed = parse_arpa(&text, &sym).unwrap();
        assert_eq!(parse_arpa(&serialize_arpa(&parsed, &sym), &sym).unwrap(), parsed);
        round_trips += 1;
    }

    let list: NbestList = parse_nbest(
        "0 ||| 4 5 ||| lm=-2.0 wc=2.0 ||| -1.2\n0 ||| 4 ||| ||| -2.0\n2 ||| 5 ||| ||| -0.5\n",
        &sym,
    )
    .unwrap();
    assert_eq!(parse_nbest(&serialize_nbest(&list, &sym), &sym).unwrap(), list);
    round_trips += 1;

    let table = parse_ngram_table("3 : 0.25\n3 4 : -0.5\n", &sym).unwrap();
    assert_eq!(
        parse_ngram_table(&serialize_ngram_table(&table, &sym), &sym).unwrap(),
        table
    );
    round_trips += 1;

    let named = SymbolTable::parse("the\t3\ncat\t4\n").unwrap();
    let first = named.serialize().unwrap();
    let reparsed = SymbolTable::parse(&first).unwrap();
    assert_eq!(reparsed.serialize().unwrap(), first);
    round_trips += 1;

    let sentences = parse_source_lines("4 5 6\n9\n", &sym).unwrap();
    let rendered: Vec<String> =
        sentences.iter().map(|s| render_tokens(s.tokens(), &sym)).collect();
    assert_eq!(rendered.join("\n") + "\n", "4 5 6\n9\n");
    round_trips += 1;

    println!(
        "PASS format robustness: {} malformed inputs rejected at the right line, \
         {round_trips} serialize-parse identities",
        rejected.get()
    );
}
