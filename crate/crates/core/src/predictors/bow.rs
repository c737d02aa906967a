//! Bag-of-words constraint: restricts hypotheses to arrangements of a
//! per-sentence token bag. Without repetition the bag is a multiset to
//! use up exactly; with repetition every bag token must appear at least
//! once but may appear more often.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::posterior::Posterior;
use crate::predictor::{Predictor, PredictorState};
use crate::vocab::{SourceSentence, TokenId, EOS_ID};

#[derive(Debug, Clone, PartialEq)]
struct BagState {
    /// Outstanding obligation per bag token. With repetition this only
    /// tracks coverage; a token at zero stays allowed.
    remaining: BTreeMap<TokenId, u32>,
    dead: bool,
}

impl BagState {
    fn exhausted(&self) -> bool {
        self.remaining.values().all(|&c| c == 0)
    }
}

pub struct BagOfWordsPredictor {
    /// One bag per sentence id.
    bags: Arc<Vec<Vec<TokenId>>>,
    allow_repetition: bool,
    state: Option<BagState>,
}

impl BagOfWordsPredictor {
    pub fn new(bags: Vec<Vec<TokenId>>, allow_repetition: bool) -> Result<Self> {
        for (i, bag) in bags.iter().enumerate() {
            if bag.is_empty() {
                return Err(Error::Config(format!("bag {i} is empty")));
            }
            if bag.contains(&EOS_ID) {
                return Err(Error::Config(format!("bag {i} contains eos")));
            }
        }
        Ok(BagOfWordsPredictor { bags: Arc::new(bags), allow_repetition, state: None })
    }

    fn state(&self) -> Result<&BagState> {
        self.state
            .as_ref()
            .ok_or_else(|| Error::Usage("bow used before initialize".into()))
    }
}

impl Predictor for BagOfWordsPredictor {
    fn name(&self) -> &'static str {
        "bow"
    }

    fn initialize(&mut self, src: &SourceSentence) -> Result<()> {
        let bag = self.bags.get(src.id()).ok_or_else(|| {
            Error::Config(format!(
                "no bag for sentence {} ({} loaded)",
                src.id(),
                self.bags.len()
            ))
        })?;
        let mut remaining: BTreeMap<TokenId, u32> = BTreeMap::new();
        for &t in bag {
            *remaining.entry(t).or_insert(0) += 1;
        }
        self.state = Some(BagState { remaining, dead: false });
        Ok(())
    }

    fn predict_next(&mut self) -> Result<Posterior> {
        let s = self.state()?;
        if s.dead {
            return Err(Error::DeadHypothesis);
        }
        let mut post = Posterior::restrictive();
        for (&t, &count) in &s.remaining {
            if self.allow_repetition || count > 0 {
                post.insert(t, 0.0);
            }
        }
        if s.exhausted() {
            post.insert(EOS_ID, 0.0);
        }
        Ok(post)
    }

    fn consume(&mut self, token: TokenId) -> Result<()> {
        let allow_repetition = self.allow_repetition;
        let s = self.state()?;
        let ok = if token == EOS_ID {
            s.exhausted()
        } else {
            match s.remaining.get(&token) {
                Some(&count) => allow_repetition || count > 0,
                None => false,
            }
        };
        let s = self.state.as_mut().expect("initialized");
        if !ok {
            s.dead = true;
        } else if token != EOS_ID {
            let count = s.remaining.get_mut(&token).expect("checked above");
            *count = count.saturating_sub(1);
        }
        Ok(())
    }

    fn get_state(&self) -> PredictorState {
        PredictorState::new(self.state.clone())
    }

    fn set_state(&mut self, state: &PredictorState) -> Result<()> {
        self.state = state.downcast_ref::<Option<BagState>>("bow state")?.clone();
        Ok(())
    }
}
