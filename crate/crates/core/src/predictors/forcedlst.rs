//! N-best list constraint: restricts the search to the hypotheses of a
//! per-sentence n-best list, stored as a trie. In rescore mode the
//! stored total score of a hypothesis is charged on its final token, so
//! searching under this predictor alone reranks the list by its scores.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formats::nbest::NbestList;
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, EOS_ID};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbestMode {
    /// Allowed continuations score 0.0; the predictor is a pure
    /// constraint.
    AcceptOnly,
    /// Ending a listed hypothesis scores its stored total.
    Rescore,
}

#[derive(Debug, Clone, Default)]
struct TrieNode {
    children: BTreeMap<TokenId, usize>,
    /// Stored total score; set only on the node reached by eos.
    leaf_score: Option<f64>,
}

#[derive(Debug, Clone, Default)]
struct Trie {
    nodes: Vec<TrieNode>,
}

impl Trie {
    fn insert(&mut self, tokens: &[TokenId], score: f64) {
        if self.nodes.is_empty() {
            self.nodes.push(TrieNode::default());
        }
        let mut node = 0;
        for &t in tokens {
            node = match self.nodes[node].children.get(&t) {
                Some(&child) => child,
                None => {
                    self.nodes.push(TrieNode::default());
                    let child = self.nodes.len() - 1;
                    self.nodes[node].children.insert(t, child);
                    child
                }
            };
        }
        // Duplicate hypotheses keep their best score.
        let leaf = &mut self.nodes[node].leaf_score;
        *leaf = Some(leaf.map_or(score, |old| old.max(score)));
    }

    fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
struct NbestState {
    sentence: usize,
    /// Current trie node; `None` once the hypothesis left the trie.
    node: Option<usize>,
}

pub struct NbestPredictor {
    tries: Arc<Vec<Trie>>,
    mode: NbestMode,
    state: Option<NbestState>,
}

impl NbestPredictor {
    pub fn new(list: &NbestList, mode: NbestMode) -> Result<Self> {
        let max_id = list.entries().iter().map(|e| e.sentence_id).max();
        let mut tries = vec![Trie::default(); max_id.map_or(0, |m| m + 1)];
        for entry in list.entries() {
            if !entry.total.is_finite() {
                return Err(Error::Validation(format!(
                    "sentence {} has a non-finite n-best score",
                    entry.sentence_id
                )));
            }
            let mut tokens = entry.tokens.clone();
            tokens.push(EOS_ID);
            tries[entry.sentence_id].insert(&tokens, entry.total);
        }
        Ok(NbestPredictor { tries: Arc::new(tries), mode, state: None })
    }

    fn state(&self) -> Result<&NbestState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Usage("forcedlst used before initialize".into()))
    }

    fn trie(&self, state: &NbestState) -> &Trie {
        &self.tries[state.sentence]
    }
}

impl Predictor for NbestPredictor {
    fn name(&self) -> &'static str {
        "forcedlst"
    }

    fn initialize(&mut self, src: &SourceSentence) -> Result<()> {
        match self.tries.get(src.id()) {
            Some(trie) if !trie.is_empty() => {
                self.state = Some(NbestState { sentence: src.id(), node: Some(0) });
                Ok(())
            }
            _ => Err(Error::Config(format!(
                "no n-best entries for sentence {}",
                src.id()
            ))),
        }
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        let s = self.state()?;
        let node = s.node.ok_or(Error::DeadHypothesis)?;
        let trie = self.trie(s);
        let children = &trie.nodes[node].children;
        if children.is_empty() {
            return Err(Error::DeadHypothesis);
        }
        let mut post = Posterior::restrictive();
        for (&t, &child) in children {
            let score = match self.mode {
                NbestMode::AcceptOnly => 0.0,
                NbestMode::Rescore if t == EOS_ID => {
                    trie.nodes[child].leaf_score.expect("eos edges lead to leaves")
                }
                NbestMode::Rescore => 0.0,
            };
            post.insert(t, score);
        }
        Ok(post)
    }

    fn consume(&mut self, token: TokenId) -> Result<()> {
        let s = self.state()?;
        let next = s
            .node
            .and_then(|node| self.trie(s).nodes[node].children.get(&token).copied());
        self.state.as_mut().expect("initialized").node = next;
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(self.state.clone())
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        self.state = state.downcast_ref::<Option<NbestState>>("forcedlst state")?.clone();
        Ok(())
    }
}
