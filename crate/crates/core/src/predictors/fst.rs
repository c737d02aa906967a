//! Finite-state predictor: walks a weighted automaton, scoring each
//! token with the negated tropical cost of its arc. The end-of-sentence
//! token is available wherever an epsilon path reaches a final state,
//! scoring the negated path-plus-final cost, so a complete hypothesis
//! scores exactly minus its path cost.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formats::att::{StateId, WeightedFst, EPSILON};
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, EOS_ID};

/// How a nondeterministic automaton combines equal-label alternatives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMerge {
    /// Keep the best alternative (Viterbi).
    Max,
    /// Log-sum-exp over alternatives; transitions still follow the best.
    LogSum,
}

#[derive(Debug, Clone, PartialEq)]
struct FstState {
    /// Current automaton node; `None` once the hypothesis left the
    /// automaton (violation) or ended (consumed eos via a final state).
    node: Option<StateId>,
}

/// One way to emit a label from the current node: score and where the
/// transition leads. `target` is `None` for end-of-sentence via a final
/// state, which terminates the walk.
#[derive(Debug, Clone, Copy)]
struct Alternative {
    score: f64,
    target: Option<StateId>,
}

pub struct FstPredictor {
    fst: Arc<WeightedFst>,
    nondeterministic: bool,
    merge: LabelMerge,
    /// Per node: epsilon-reachable (node, best path cost) pairs in
    /// ascending node order, always including the node itself at 0.
    closures: Vec<Vec<(StateId, f64)>>,
    state: Option<FstState>,
}

impl FstPredictor {
    /// A deterministic automaton: offering the same label twice from one
    /// position is reported as an ambiguity error.
    pub fn deterministic(fst: Arc<WeightedFst>) -> Result<Self> {
        Self::build(fst, false, LabelMerge::Max)
    }

    pub fn nondeterministic(fst: Arc<WeightedFst>, merge: LabelMerge) -> Result<Self> {
        Self::build(fst, true, merge)
    }

    fn build(fst: Arc<WeightedFst>, nondeterministic: bool, merge: LabelMerge) -> Result<Self> {
        let closures = epsilon_closures(&fst)?;
        Ok(FstPredictor { fst, nondeterministic, merge, closures, state: None })
    }

    fn state(&self) -> Result<&FstState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Usage("fst used before initialize".into()))
    }

    /// All alternatives per label from `node`, grouped in ascending
    /// label order; within a label, file order of the arcs then finals.
    fn alternatives(&self, node: StateId) -> BTreeMap<TokenId, Vec<Alternative>> {
        let mut out: BTreeMap<TokenId, Vec<Alternative>> = BTreeMap::new();
        for &(reached, eps_cost) in &self.closures[node as usize] {
            for arc in self.fst.arcs(reached) {
                if arc.ilabel == EPSILON {
                    continue;
                }
                out.entry(arc.ilabel).or_default().push(Alternative {
                    score: -(eps_cost + arc.cost) + 0.0,
                    target: Some(arc.dst),
                });
            }
            if let Some(final_cost) = self.fst.final_cost(reached) {
                out.entry(EOS_ID).or_default().push(Alternative {
                    score: -(eps_cost + final_cost) + 0.0,
                    target: None,
                });
            }
        }
        out
    }

    /// Collapses a label's alternatives to one score and one transition
    /// target. Ties prefer the smallest target node; ending the walk
    /// loses ties against continuing it.
    fn merge_alternatives(&self, node: StateId, label: TokenId, alts: &[Alternative]) -> Result<Alternative> {
        if alts.len() > 1 && !self.nondeterministic {
            return Err(Error::Ambiguous(format!(
                "state {node} offers label {label} more than once; use the nondeterministic variant"
            )));
        }
        let best = alts
            .iter()
            .copied()
            .min_by(|a, b| {
                b.score
                    .total_cmp(&a.score)
                    .then_with(|| target_rank(a.target).cmp(&target_rank(b.target)))
            })
            .expect("nonempty alternatives");
        let score = match self.merge {
            LabelMerge::Max => best.score,
            LabelMerge::LogSum => log_sum_exp(alts.iter().map(|a| a.score)),
        };
        Ok(Alternative { score, target: best.target })
    }
}

fn target_rank(target: Option<StateId>) -> u64 {
    target.map_or(u64::MAX, |t| t as u64)
}

fn log_sum_exp(scores: impl Iterator<Item = f64> + Clone) -> f64 {
    let max = scores.clone().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + scores.map(|s| (s - max).exp()).sum::<f64>().ln() + 0.0
}

impl Predictor for FstPredictor {
    fn name(&self) -> &'static str {
        if self.nondeterministic {
            "nfst"
        } else {
            "fst"
        }
    }

    fn initialize(&mut self, _src: &SourceSentence) -> Result<()> {
        self.state = Some(FstState { node: Some(self.fst.start()) });
        Ok(())
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        let node = self.state()?.node.ok_or(Error::DeadHypothesis)?;
        let mut post = Posterior::restrictive();
        for (label, alts) in self.alternatives(node) {
            let merged = self.merge_alternatives(node, label, &alts)?;
            post.insert(label, merged.score);
        }
        if post.is_empty() {
            return Err(Error::DeadHypothesis);
        }
        Ok(post)
    }

    fn consume(&mut self, token: TokenId) -> Result<()> {
        let Some(node) = self.state()?.node else {
            return Ok(()); // already off the automaton, stays dead
        };
        let next = match self.alternatives(node).get(&token) {
            Some(alts) => self.merge_alternatives(node, token, alts)?.target,
            None => None,
        };
        self.state.as_mut().expect("initialized").node = next;
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(self.state.clone())
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        self.state = state.downcast_ref::<Option<FstState>>("fst state")?.clone();
        Ok(())
    }
}

/// Best-cost epsilon closure of every node. Fails when the automaton
/// contains an epsilon cycle of non-positive cost, which would make the
/// closure unbounded or ill-defined.
fn epsilon_closures(fst: &WeightedFst) -> Result<Vec<Vec<(StateId, f64)>>> {
    let n = fst.num_states();
    let mut eps_arcs: Vec<(StateId, StateId, f64)> = Vec::new();
    for s in 0..n as StateId {
        for arc in fst.arcs(s) {
            if arc.ilabel == EPSILON {
                eps_arcs.push((s, arc.dst, arc.cost));
            }
        }
    }

    let mut closures: Vec<Vec<(StateId, f64)>> =
        (0..n as StateId).map(|s| vec![(s, 0.0)]).collect();
    if eps_arcs.is_empty() {
        return Ok(closures);
    }

    // Dense all-pairs best costs over the states touched by epsilons.
    // The diagonal starts unreachable so a finite non-positive d(v, v)
    // can only come from a real cycle.
    let mut touched: Vec<StateId> = eps_arcs
        .iter()
        .flat_map(|&(s, d, _)| [s, d])
        .collect();
    touched.sort_unstable();
    touched.dedup();
    let index: BTreeMap<StateId, usize> = touched.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let m = touched.len();
    let mut dist = vec![vec![f64::INFINITY; m]; m];
    for &(src, dst, cost) in &eps_arcs {
        let (i, j) = (index[&src], index[&dst]);
        dist[i][j] = dist[i][j].min(cost);
    }
    for k in 0..m {
        for i in 0..m {
            if dist[i][k].is_infinite() {
                continue;
            }
            for j in 0..m {
                let through = dist[i][k] + dist[k][j];
                if through < dist[i][j] {
                    dist[i][j] = through;
                }
            }
        }
    }
    for (i, &s) in touched.iter().enumerate() {
        if dist[i][i] <= 0.0 {
            return Err(Error::Validation(format!(
                "epsilon cycle of non-positive cost through state {s}"
            )));
        }
    }

    for (i, &s) in touched.iter().enumerate() {
        for (j, &reached) in touched.iter().enumerate() {
            if reached == s || dist[i][j].is_infinite() {
                continue;
            }
            closures[s as usize].push((reached, dist[i][j]));
        }
        closures[s as usize].sort_by_key(|&(node, _)| node);
    }
    Ok(closures)
}
