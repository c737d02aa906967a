//! Text-format weighted finite-state transducers.
//!
//! The format is line oriented: "src dst ilabel olabel [cost]" describes
//! an arc (cost defaults to 0) and "state [finalcost]" marks a final
//! state. The first line's source state is the start state. Costs are
//! tropical: lower is better, path cost is the sum of arc costs plus the
//! final cost.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type StateId = u32;
pub type Label = u32;

/// Label 0 never carries a symbol; it marks an epsilon transition.
pub const EPSILON: Label = 0;

#[derive(Debug, Clone, PartialEq)]
pub struct FstArc {
    pub dst: StateId,
    pub ilabel: Label,
    pub olabel: Label,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedFst {
    start: StateId,
    /// Outgoing arcs per state, in file order.
    arcs: Vec<Vec<FstArc>>,
    finals: BTreeMap<StateId, f64>,
}

impl WeightedFst {
    pub fn start(&self) -> StateId {
        self.start
    }

    pub fn num_states(&self) -> usize {
        self.arcs.len()
    }

    pub fn arcs(&self, state: StateId) -> &[FstArc] {
        &self.arcs[state as usize]
    }

    /// Final cost of `state`, `None` when the state is not final.
    pub fn final_cost(&self, state: StateId) -> Option<f64> {
        self.finals.get(&state).copied()
    }

    pub fn finals(&self) -> impl Iterator<Item = (StateId, f64)> + '_ {
        self.finals.iter().map(|(&s, &c)| (s, c))
    }
}

pub fn parse_att_fst(text: &str) -> Result<WeightedFst> {
    let mut start: Option<StateId> = None;
    let mut arcs: Vec<(StateId, FstArc)> = Vec::new();
    let mut finals: BTreeMap<StateId, f64> = BTreeMap::new();
    let mut mentioned: BTreeSet<StateId> = BTreeSet::new();

    for (idx, line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields.len() {
            1 | 2 => {
                let state = parse_state(fields[0], lineno)?;
                let cost = match fields.get(1) {
                    Some(f) => parse_cost(f, lineno)?,
                    None => 0.0,
                };
                if finals.insert(state, cost).is_some() {
                    return Err(Error::parse(
                        lineno,
                        format!("duplicate final weight for state {state}"),
                    ));
                }
                mentioned.insert(state);
                start.get_or_insert(state);
            }
            4 | 5 => {
                let src = parse_state(fields[0], lineno)?;
                let dst = parse_state(fields[1], lineno)?;
                let ilabel = parse_label(fields[2], lineno)?;
                let olabel = parse_label(fields[3], lineno)?;
                let cost = match fields.get(4) {
                    Some(f) => parse_cost(f, lineno)?,
                    None => 0.0,
                };
                mentioned.insert(src);
                mentioned.insert(dst);
                start.get_or_insert(src);
                arcs.push((src, FstArc { dst, ilabel, olabel, cost }));
            }
            n => {
                return Err(Error::parse(
                    lineno,
                    format!("expected 1, 2, 4 or 5 fields, found {n}"),
                ));
            }
        }
    }

    let start = start.ok_or_else(|| Error::parse(1, "automaton has no states"))?;
    let num_states = *mentioned.iter().next_back().expect("nonempty") as usize + 1;
    for id in 0..num_states as StateId {
        if !mentioned.contains(&id) {
            return Err(Error::Validation(format!(
                "state ids are not contiguous: {id} is never mentioned but {} is",
                num_states - 1
            )));
        }
    }

    let mut by_state: Vec<Vec<FstArc>> = vec![Vec::new(); num_states];
    for (src, arc) in arcs {
        by_state[src as usize].push(arc);
    }
    Ok(WeightedFst { start, arcs: by_state, finals })
}

/// Canonical rendering: tab-separated fields, 6-decimal costs, the start
/// state's arcs first, then the remaining states ascending, then final
/// lines ascending.
pub fn serialize_att_fst(fst: &WeightedFst) -> String {
    let mut out = String::new();
    let mut order: Vec<StateId> = vec![fst.start];
    order.extend((0..fst.num_states() as StateId).filter(|&s| s != fst.start));
    for state in order {
        for arc in fst.arcs(state) {
            writeln!(
                out,
                "{state}\t{}\t{}\t{}\t{:.6}",
                arc.dst, arc.ilabel, arc.olabel, arc.cost
            )
            .expect("string write");
        }
    }
    for (state, cost) in fst.finals() {
        writeln!(out, "{state}\t{cost:.6}").expect("string write");
    }
    out
}

fn parse_state(field: &str, lineno: usize) -> Result<StateId> {
    field
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid state id {field:?}")))
}

fn parse_label(field: &str, lineno: usize) -> Result<Label> {
    field
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid label {field:?}")))
}

fn parse_cost(field: &str, lineno: usize) -> Result<f64> {
    let cost: f64 = field
        .parse()
        .map_err(|_| Error::parse(lineno, format!("invalid cost {field:?}")))?;
    if !cost.is_finite() {
        return Err(Error::parse(lineno, format!("cost {field:?} is not finite")));
    }
    Ok(cost)
}
