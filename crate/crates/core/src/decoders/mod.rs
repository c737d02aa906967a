//! Search strategies over the hypothesis space spanned by an ensemble.
//!
//! Every decoder consumes the same ensemble surface: expand a hypothesis
//! into scored one-token extensions, advance it by one of them, and rank
//! hypotheses by score. Strategies differ only in which hypotheses they
//! keep alive and in what order they extend them.

use std::cmp::Ordering;
use std::fmt;
use std::rc::Rc;

use crate::ensemble::{Ensemble, Expansion};
use crate::error::{Error, Result};
use crate::hypothesis::{compare_hypotheses, PartialHypothesis};
use crate::vocab::{SourceSentence, TokenId, BOS_ID, EOS_ID};

mod astar;
mod beam;
mod bucket;
mod dfs;
mod greedy;
mod restarting;
mod sepbeam;
mod syncbeam;

pub use astar::{AstarDecoder, Heuristic, StepBoundHeuristic, ZeroHeuristic};
pub use beam::BeamDecoder;
pub use bucket::BucketDecoder;
pub use dfs::DfsDecoder;
pub use greedy::GreedyDecoder;
pub use restarting::RestartingDecoder;
pub use sepbeam::SepbeamDecoder;
pub use syncbeam::SyncbeamDecoder;

/// Knobs shared by all search strategies. Strategies ignore the fields
/// they have no use for.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderConfig {
    /// Number of hypotheses kept per step by beam-family strategies;
    /// also caps the returned n-best list for every strategy.
    pub beam_size: usize,
    /// Hard cap on hypothesis length counted after the start symbol,
    /// end symbol included. `None` defaults to three times the source
    /// length.
    pub max_len: Option<usize>,
    /// Token at which syncbeam aligns hypotheses for comparison.
    pub sync_symbol: Option<TokenId>,
    /// Cap on the number of hypothesis expansions for the exhaustive
    /// strategies. `None` means unlimited.
    pub node_budget: Option<u64>,
    /// Asserts that every combined per-step score is ≤ 0, enabling
    /// admissible pruning against the best complete hypothesis.
    pub nonpositive_scores: bool,
}

impl Default for DecoderConfig {
    fn default() -> Self {
        DecoderConfig {
            beam_size: 1,
            max_len: None,
            sync_symbol: None,
            node_budget: None,
            nonpositive_scores: false,
        }
    }
}

impl DecoderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam size must be at least 1".into()));
        }
        if self.max_len == Some(0) {
            return Err(Error::Config("maximum hypothesis length must be at least 1".into()));
        }
        if self.node_budget == Some(0) {
            return Err(Error::Config("node budget must be at least 1".into()));
        }
        if self.sync_symbol == Some(BOS_ID) {
            return Err(Error::Config(
                "the start symbol cannot serve as synchronization symbol".into(),
            ));
        }
        Ok(())
    }

    /// The length cap in effect for one sentence.
    pub fn effective_max_len(&self, src: &SourceSentence) -> usize {
        self.max_len.unwrap_or_else(|| (3 * src.len()).max(1))
    }
}

/// Counters reported alongside every search result.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    /// Hypotheses whose continuations were scored (one per predict call
    /// over a hypothesis context).
    pub expansions: u64,
    /// Branches discarded by a score bound or a beam cutoff.
    pub pruned: u64,
    /// Greedy descents beyond the first in the restarting strategy.
    pub restarts: u64,
    /// True when a node budget stopped the search early.
    pub truncated: bool,
}

/// Outcome of decoding one sentence: the complete hypotheses found, best
/// first, plus search counters. An empty list means the search failed to
/// produce any complete hypothesis.
#[derive(Debug, Clone)]
pub struct SearchResult {
    pub nbest: Vec<PartialHypothesis>,
    pub stats: SearchStats,
}

impl SearchResult {
    /// Sorts, then caps the list; every entry must be complete.
    pub(crate) fn from_completes(
        mut completes: Vec<PartialHypothesis>,
        cap: usize,
        stats: SearchStats,
    ) -> Self {
        debug_assert!(completes.iter().all(|h| h.is_complete()));
        completes.sort_by(compare_hypotheses);
        completes.truncate(cap);
        SearchResult { nbest: completes, stats }
    }

    pub fn best(&self) -> Option<&PartialHypothesis> {
        self.nbest.first()
    }

    pub fn is_failure(&self) -> bool {
        self.nbest.is_empty()
    }
}

/// A search strategy bound to its configuration. Instances are cheap and
/// carry no per-sentence state; the same decoder may be reused across
/// sentences but not shared across threads mid-decode.
pub trait Decoder: Send {
    fn name(&self) -> &'static str;

    /// Runs the search for one sentence. Search failure (no complete
    /// hypothesis) is a regular result with an empty n-best list; `Err`
    /// is reserved for contract violations and broken resources.
    fn decode(&mut self, ensemble: &mut Ensemble, src: &SourceSentence) -> Result<SearchResult>;
}

/// The selectable search strategies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecoderKind {
    Greedy,
    Beam,
    Dfs,
    Restarting,
    Astar,
    Sepbeam,
    Syncbeam,
    Bucket,
}

impl DecoderKind {
    pub const ALL: [DecoderKind; 8] = [
        DecoderKind::Greedy,
        DecoderKind::Beam,
        DecoderKind::Dfs,
        DecoderKind::Restarting,
        DecoderKind::Astar,
        DecoderKind::Sepbeam,
        DecoderKind::Syncbeam,
        DecoderKind::Bucket,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DecoderKind::Greedy => "greedy",
            DecoderKind::Beam => "beam",
            DecoderKind::Dfs => "dfs",
            DecoderKind::Restarting => "restarting",
            DecoderKind::Astar => "astar",
            DecoderKind::Sepbeam => "sepbeam",
            DecoderKind::Syncbeam => "syncbeam",
            DecoderKind::Bucket => "bucket",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        DecoderKind::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown decoder '{name}'")))
    }
}

/// Instantiates the named strategy. The astar variant gets the zero
/// heuristic; use `AstarDecoder::with_heuristic` for anything else.
pub fn build_decoder(kind: DecoderKind, config: DecoderConfig) -> Result<Box<dyn Decoder>> {
    Ok(match kind {
        DecoderKind::Greedy => Box::new(GreedyDecoder::new(config)?),
        DecoderKind::Beam => Box::new(BeamDecoder::new(config)?),
        DecoderKind::Dfs => Box::new(DfsDecoder::new(config)?),
        DecoderKind::Restarting => Box::new(RestartingDecoder::new(config)?),
        DecoderKind::Astar => Box::new(AstarDecoder::new(config)?),
        DecoderKind::Sepbeam => Box::new(SepbeamDecoder::new(config)?),
        DecoderKind::Syncbeam => Box::new(SyncbeamDecoder::new(config)?),
        DecoderKind::Bucket => Box::new(BucketDecoder::new(config)?),
    })
}

/// One engine-level step taken by a decoder, recorded for fidelity
/// checks against hand-computed traces. `render` gives the stable
/// one-line form golden files are written in.
#[derive(Debug, Clone, PartialEq)]
pub enum TraceEvent {
    Initialize,
    /// States restored to a stored snapshot before predicting/consuming.
    RestoreState { trajectory: Vec<TokenId> },
    /// Posterior requested for the hypothesis context.
    PredictNext { trajectory: Vec<TokenId> },
    /// Greedy's argmax pick for the current step.
    Chosen { token: TokenId, score: f64 },
    /// One hypothesis kept by a beam cutoff, emitted in rank order.
    Selected { trajectory: Vec<TokenId>, score: f64 },
    Consume { token: TokenId },
    /// Fresh snapshot captured after a consume.
    CaptureState { trajectory: Vec<TokenId> },
}

impl TraceEvent {
    pub fn render(&self) -> String {
        fn traj(t: &[TokenId]) -> String {
            t.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
        }
        match self {
            TraceEvent::Initialize => "initialize".into(),
            TraceEvent::RestoreState { trajectory } => {
                format!("set_state [{}]", traj(trajectory))
            }
            TraceEvent::PredictNext { trajectory } => {
                format!("predict_next [{}]", traj(trajectory))
            }
            TraceEvent::Chosen { token, score } => format!("chosen {token} {score:.6}"),
            TraceEvent::Selected { trajectory, score } => {
                format!("selected [{}] {score:.6}", traj(trajectory))
            }
            TraceEvent::Consume { token } => format!("consume {token}"),
            TraceEvent::CaptureState { trajectory } => {
                format!("get_state [{}]", traj(trajectory))
            }
        }
    }
}

impl fmt::Display for TraceEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.render())
    }
}

/// Expands a hypothesis, treating an already-dead hypothesis as having
/// no continuations rather than as an error.
pub(crate) fn live_expansions(
    ensemble: &mut Ensemble,
    hyp: &PartialHypothesis,
) -> Result<Vec<Expansion>> {
    match ensemble.expand(hyp) {
        Ok(v) => Ok(v),
        Err(Error::DeadHypothesis) => Ok(Vec::new()),
        Err(e) => Err(e),
    }
}

/// An unexpanded search node. `Pending` defers the consume until the
/// node is actually visited, so branches cut by a bound never touch the
/// predictors; siblings share the parent snapshot through the `Rc`.
pub(crate) enum Open {
    Ready(PartialHypothesis),
    Pending { parent: Rc<PartialHypothesis>, exp: Expansion },
}

impl Open {
    pub(crate) fn score(&self) -> f64 {
        match self {
            Open::Ready(h) => h.score,
            Open::Pending { parent, exp } => parent.score + exp.combined + 0.0,
        }
    }

    pub(crate) fn len(&self) -> usize {
        match self {
            Open::Ready(h) => h.len(),
            Open::Pending { parent, .. } => parent.len() + 1,
        }
    }

    pub(crate) fn last_token(&self) -> TokenId {
        match self {
            Open::Ready(h) => *h.trajectory.last().expect("trajectory starts at bos"),
            Open::Pending { exp, .. } => exp.token,
        }
    }

    pub(crate) fn is_complete(&self) -> bool {
        self.last_token() == EOS_ID
    }

    fn trajectory_iter(&self) -> impl Iterator<Item = TokenId> + '_ {
        match self {
            Open::Ready(h) => h.trajectory.iter().copied().chain(None),
            Open::Pending { parent, exp } => {
                parent.trajectory.iter().copied().chain(Some(exp.token))
            }
        }
    }

    /// Turns the node into a full hypothesis, consuming the pending
    /// token if there is one.
    pub(crate) fn materialize(self, ensemble: &mut Ensemble) -> Result<PartialHypothesis> {
        match self {
            Open::Ready(h) => Ok(h),
            Open::Pending { parent, exp } => ensemble.advance(&parent, &exp),
        }
    }
}

/// Max-heap entry: higher priority pops first, ties resolved toward the
/// lexicographically smaller trajectory so pop order is deterministic.
pub(crate) struct Prioritized {
    pub(crate) priority: f64,
    pub(crate) node: Open,
}

impl PartialEq for Prioritized {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Prioritized {}

impl PartialOrd for Prioritized {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Prioritized {
    fn cmp(&self, other: &Self) -> Ordering {
        self.priority
            .total_cmp(&other.priority)
            .then_with(|| other.node.trajectory_iter().cmp(self.node.trajectory_iter()))
    }
}
