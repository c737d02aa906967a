//! Tokenization wrapper: lets a predictor over one token granularity
//! (e.g. characters) score hypotheses at another granularity (e.g.
//! words), through a transducer mapping outer tokens to inner-token
//! sequences.
//!
//! Scoring an outer token runs the inner predictor forward over the
//! token's inner expansion using save/restore, without committing.
//! Consuming queues the expansion; the queue is drained into the inner
//! predictor before the next prediction. Only functional transducers
//! are supported: each outer token must have exactly one inner
//! expansion from the current node, anything else is an ambiguity
//! error. Transducer arc costs are ignored; all scores come from the
//! inner predictor.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::formats::att::{FstArc, Label, StateId, WeightedFst, EPSILON};
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, EOS_ID};

#[derive(Clone)]
struct FsttokState {
    /// Current transducer node; `None` once the hypothesis left the
    /// transducer or ended.
    node: Option<StateId>,
    /// Inner tokens committed by consume but not yet fed to the inner
    /// predictor.
    pending: Vec<Label>,
    inner: PredictorState,
}

pub struct FsttokWrapper {
    inner: Box<dyn Predictor>,
    transducer: Arc<WeightedFst>,
    node: Option<StateId>,
    pending: Vec<Label>,
    initialized: bool,
}

impl FsttokWrapper {
    pub fn new(inner: Box<dyn Predictor>, transducer: Arc<WeightedFst>) -> Self {
        FsttokWrapper { inner, transducer, node: None, pending: Vec::new(), initialized: false }
    }

    fn check_initialized(&self) -> Result<()> {
        if self.initialized {
            Ok(())
        } else {
            Err(Error::Usage("fsttok used before initialize".into()))
        }
    }

    fn real_arcs(&self, node: StateId) -> impl Iterator<Item = &FstArc> {
        self.transducer.arcs(node).iter().filter(|a| a.ilabel != EPSILON)
    }

    fn eps_arcs(&self, node: StateId) -> impl Iterator<Item = &FstArc> {
        self.transducer.arcs(node).iter().filter(|a| a.ilabel == EPSILON)
    }

    /// Follows forced epsilon-input chains from `node`, collecting the
    /// inner tokens they emit, until a node that offers a choice (real
    /// arcs, finality, or a dead end). A node mixing epsilon arcs with
    /// real arcs or finality has more than one reading and is rejected.
    fn settle(&self, mut node: StateId) -> Result<(Vec<Label>, StateId)> {
        let mut emitted = Vec::new();
        let mut seen = BTreeSet::new();
        loop {
            let eps: Vec<&FstArc> = self.eps_arcs(node).collect();
            if eps.is_empty() {
                return Ok((emitted, node));
            }
            let has_real = self.real_arcs(node).next().is_some();
            let is_final = self.transducer.final_cost(node).is_some();
            if eps.len() > 1 || has_real || is_final {
                return Err(Error::Ambiguous(format!(
                    "transducer state {node} has more than one reading; only functional transducers are supported"
                )));
            }
            if !seen.insert(node) {
                return Err(Error::Ambiguous(format!(
                    "transducer has an epsilon-input cycle through state {node}"
                )));
            }
            if eps[0].olabel != EPSILON {
                emitted.push(eps[0].olabel);
            }
            node = eps[0].dst;
        }
    }

    /// The unique inner expansion of outer token `t` from `node` and the
    /// node the transducer lands on.
    fn expansion(&self, node: StateId, token: TokenId) -> Result<Option<(Vec<Label>, StateId)>> {
        let arcs: Vec<&FstArc> = self.real_arcs(node).filter(|a| a.ilabel == token).collect();
        match arcs.len() {
            0 => Ok(None),
            1 => {
                let (mut emitted, landing) = self.settle(arcs[0].dst)?;
                if arcs[0].olabel != EPSILON {
                    emitted.insert(0, arcs[0].olabel);
                }
                Ok(Some((emitted, landing)))
            }
            _ => Err(Error::Ambiguous(format!(
                "transducer state {node} offers outer token {token} more than once"
            ))),
        }
    }

    fn drain(&mut self) -> Result<()> {
        for tok in std::mem::take(&mut self.pending) {
            self.inner.consume(tok)?;
        }
        Ok(())
    }

    /// Sum of inner scores along `expansion` from the current inner
    /// state; `None` when the inner predictor rules the expansion out.
    fn probe(&mut self, expansion: &[Label]) -> Result<Option<f64>> {
        let mut sum = 0.0;
        for &tok in expansion {
            let score = match self.inner.predict_next() {
                Ok(p) => p.score(tok),
                Err(Error::DeadHypothesis) => return Ok(None),
                Err(e) => return Err(e),
            };
            if score == f64::NEG_INFINITY {
                return Ok(None);
            }
            sum += score;
            self.inner.consume(tok)?;
        }
        Ok(Some(sum + 0.0))
    }
}

impl Predictor for FsttokWrapper {
    fn name(&self) -> &'static str {
        "fsttok"
    }

    fn initialize(&mut self, src: &SourceSentence) -> Result<()> {
        self.inner.initialize(src)?;
        let (pending, node) = self.settle(self.transducer.start())?;
        self.pending = pending;
        self.node = Some(node);
        self.initialized = true;
        Ok(())
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        self.check_initialized()?;
        let node = self.node.ok_or(Error::DeadHypothesis)?;
        self.drain()?;
        let base = self.inner.get_state();

        let mut outer: BTreeMap<TokenId, Vec<Label>> = BTreeMap::new();
        for label in self.real_arcs(node).map(|a| a.ilabel).collect::<BTreeSet<_>>() {
            if let Some((expansion, _)) = self.expansion(node, label)? {
                outer.insert(label, expansion);
            }
        }
        if self.transducer.final_cost(node).is_some() {
            outer.insert(EOS_ID, vec![EOS_ID]);
        }

        let mut post = Posterior::restrictive();
        for (token, expansion) in outer {
            self.inner.set_state(&base)?;
            if let Some(score) = self.probe(&expansion)? {
                post.insert(token, score);
            }
        }
        self.inner.set_state(&base)?;
        if post.is_empty() {
            return Err(Error::DeadHypothesis);
        }
        Ok(post)
    }

    fn consume(&mut self, token: TokenId) -> Result<()> {
        self.check_initialized()?;
        let Some(node) = self.node else {
            return Ok(()); // already off the transducer, stays dead
        };
        if token == EOS_ID && self.transducer.final_cost(node).is_some() {
            self.pending.push(EOS_ID);
            self.node = None;
            return Ok(());
        }
        match self.expansion(node, token)? {
            Some((expansion, landing)) => {
                self.pending.extend(expansion);
                self.node = Some(landing);
            }
            None => self.node = None,
        }
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(FsttokState {
            node: self.node,
            pending: self.pending.clone(),
            inner: self.inner.get_state(),
        })
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        let s: &FsttokState = state.downcast_ref("fsttok state")?;
        let s: FsttokState = Clone::clone(s);
        self.inner.set_state(&s.inner)?;
        self.node = s.node;
        self.pending = s.pending;
        Ok(())
    }
}
