//! Finite transition systems `(X, X0, U, ->, Xm, Y, H)` and the unary
//! operations used throughout synthesis: accessible part, co-accessible part,
//! trim, and bounded language enumeration.

mod combine;
mod format;

pub use combine::{combine, determinize, CombineOp, Recognizer};
pub use format::AutomatonFile;

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::Dec;

pub type StateId = usize;
pub type SymbolId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomataError {
    #[error("transition ({0}, {1}, {2}) references an unknown state or input")]
    DanglingTransition(StateId, SymbolId, StateId),
    #[error("state {0} listed as initial or marked but not declared")]
    UnknownState(StateId),
    #[error("state {0} has no output label")]
    MissingOutput(StateId),
    #[error("output label given for undeclared state {0}")]
    StrayOutput(StateId),
    #[error("operands do not share a symbol table")]
    AlphabetMismatch,
    #[error("symbol table is not injective: {0}")]
    DuplicateSymbol(String),
    #[error("unknown symbol id {0}")]
    UnknownSymbol(SymbolId),
    #[error("combinator `{0}` expects {1} operand(s), got {2}")]
    Arity(&'static str, usize, usize),
    #[error("malformed automaton file: {0}")]
    Format(String),
}

/// Output of a state: an exact point of `R^n` or an opaque tag.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(untagged)]
pub enum OutputLabel {
    Point(Vec<Dec>),
    Tag(String),
}

impl OutputLabel {
    pub fn point(&self) -> Option<&[Dec]> {
        match self {
            OutputLabel::Point(p) => Some(p),
            OutputLabel::Tag(_) => None,
        }
    }
}

impl std::fmt::Display for OutputLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OutputLabel::Point(p) => {
                write!(f, "(")?;
                for (k, v) in p.iter().enumerate() {
                    if k > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{v}")?;
                }
                write!(f, ")")
            }
            OutputLabel::Tag(t) => f.write_str(t),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Transition {
    pub src: StateId,
    pub input: SymbolId,
    pub dst: StateId,
}

impl Transition {
    pub fn new(src: StateId, input: SymbolId, dst: StateId) -> Self {
        Transition { src, input, dst }
    }
}

/// Bijection between symbol ids and exact points. Ids follow the
/// lexicographic order of the points, so "smallest symbol id" and "smallest
/// point" coincide.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SymbolTable {
    points: Vec<Vec<Dec>>,
}

impl SymbolTable {
    pub fn from_points<I: IntoIterator<Item = Vec<Dec>>>(points: I) -> SymbolTable {
        let set: BTreeSet<Vec<Dec>> = points.into_iter().collect();
        SymbolTable { points: set.into_iter().collect() }
    }

    /// Builds a table that keeps the given id assignment; rejects duplicates.
    pub fn from_ordered(points: Vec<Vec<Dec>>) -> Result<SymbolTable, AutomataError> {
        let mut seen = BTreeSet::new();
        for p in &points {
            if !seen.insert(p.clone()) {
                return Err(AutomataError::DuplicateSymbol(OutputLabel::Point(p.clone()).to_string()));
            }
        }
        Ok(SymbolTable { points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn id_of(&self, point: &[Dec]) -> Option<SymbolId> {
        self.points.iter().position(|p| p.as_slice() == point)
    }

    pub fn point(&self, id: SymbolId) -> Option<&[Dec]> {
        self.points.get(id).map(Vec::as_slice)
    }

    pub fn points(&self) -> &[Vec<Dec>] {
        &self.points
    }

    pub fn ids(&self) -> std::ops::Range<SymbolId> {
        0..self.points.len()
    }
}

/// A finite system. State ids need not be contiguous: subsystems produced by
/// [`TransitionSystem::accessible_part`] and friends keep the ids of their
/// parent, so results can be compared state-for-state.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TransitionSystem {
    states: BTreeSet<StateId>,
    initial: BTreeSet<StateId>,
    marked: BTreeSet<StateId>,
    inputs: BTreeSet<SymbolId>,
    transitions: BTreeSet<Transition>,
    outputs: BTreeMap<StateId, OutputLabel>,
}

impl TransitionSystem {
    pub fn new(
        states: impl IntoIterator<Item = StateId>,
        initial: impl IntoIterator<Item = StateId>,
        marked: impl IntoIterator<Item = StateId>,
        inputs: impl IntoIterator<Item = SymbolId>,
        transitions: impl IntoIterator<Item = Transition>,
        outputs: BTreeMap<StateId, OutputLabel>,
    ) -> Result<TransitionSystem, AutomataError> {
        let ts = TransitionSystem {
            states: states.into_iter().collect(),
            initial: initial.into_iter().collect(),
            marked: marked.into_iter().collect(),
            inputs: inputs.into_iter().collect(),
            transitions: transitions.into_iter().collect(),
            outputs,
        };
        ts.validate()?;
        Ok(ts)
    }

    /// The empty system (no states).
    pub fn empty() -> TransitionSystem {
        TransitionSystem::default()
    }

    fn validate(&self) -> Result<(), AutomataError> {
        for t in &self.transitions {
            if !self.states.contains(&t.src) || !self.states.contains(&t.dst) || !self.inputs.contains(&t.input) {
                return Err(AutomataError::DanglingTransition(t.src, t.input, t.dst));
            }
        }
        for s in self.initial.iter().chain(&self.marked) {
            if !self.states.contains(s) {
                return Err(AutomataError::UnknownState(*s));
            }
        }
        for s in &self.states {
            if !self.outputs.contains_key(s) {
                return Err(AutomataError::MissingOutput(*s));
            }
        }
        if let Some(s) = self.outputs.keys().find(|s| !self.states.contains(s)) {
            return Err(AutomataError::StrayOutput(*s));
        }
        Ok(())
    }

    pub fn states(&self) -> &BTreeSet<StateId> {
        &self.states
    }
    pub fn initial(&self) -> &BTreeSet<StateId> {
        &self.initial
    }
    pub fn marked(&self) -> &BTreeSet<StateId> {
        &self.marked
    }
    pub fn inputs(&self) -> &BTreeSet<SymbolId> {
        &self.inputs
    }
    pub fn transitions(&self) -> &BTreeSet<Transition> {
        &self.transitions
    }
    pub fn outputs(&self) -> &BTreeMap<StateId, OutputLabel> {
        &self.outputs
    }

    pub fn output(&self, s: StateId) -> Option<&OutputLabel> {
        self.outputs.get(&s)
    }

    /// A system is empty when it has no initial state.
    pub fn is_empty(&self) -> bool {
        self.initial.is_empty()
    }

    pub fn successors(&self, s: StateId) -> impl Iterator<Item = &Transition> {
        self.transitions.range(Transition::new(s, 0, 0)..=Transition::new(s, SymbolId::MAX, StateId::MAX))
    }

    /// At most one outgoing transition per (state, input).
    pub fn is_deterministic(&self) -> bool {
        let mut prev: Option<(StateId, SymbolId)> = None;
        for t in &self.transitions {
            if prev == Some((t.src, t.input)) {
                return false;
            }
            prev = Some((t.src, t.input));
        }
        true
    }

    /// Subsystem induced by `keep`, with `initial` and `marked` intersected.
    pub fn restrict(&self, keep: &BTreeSet<StateId>) -> TransitionSystem {
        TransitionSystem {
            states: self.states.intersection(keep).copied().collect(),
            initial: self.initial.intersection(keep).copied().collect(),
            marked: self.marked.intersection(keep).copied().collect(),
            inputs: self.inputs.clone(),
            transitions: self
                .transitions
                .iter()
                .filter(|t| keep.contains(&t.src) && keep.contains(&t.dst))
                .copied()
                .collect(),
            outputs: self.outputs.iter().filter(|(s, _)| keep.contains(s)).map(|(s, o)| (*s, o.clone())).collect(),
        }
    }

    /// Same states, only the transitions accepted by `keep`.
    pub fn filter_transitions(&self, mut keep: impl FnMut(&Transition) -> bool) -> TransitionSystem {
        let mut out = self.clone();
        out.transitions.retain(|t| keep(t));
        out
    }

    fn forward_closure(&self, seeds: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut seen: BTreeSet<StateId> = seeds.clone();
        let mut queue: VecDeque<StateId> = seeds.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            for t in self.successors(s) {
                if seen.insert(t.dst) {
                    queue.push_back(t.dst);
                }
            }
        }
        seen
    }

    fn backward_closure(&self, seeds: &BTreeSet<StateId>) -> BTreeSet<StateId> {
        let mut preds: BTreeMap<StateId, Vec<StateId>> = BTreeMap::new();
        for t in &self.transitions {
            preds.entry(t.dst).or_default().push(t.src);
        }
        let mut seen: BTreeSet<StateId> = seeds.clone();
        let mut queue: VecDeque<StateId> = seeds.iter().copied().collect();
        while let Some(s) = queue.pop_front() {
            for p in preds.get(&s).into_iter().flatten() {
                if seen.insert(*p) {
                    queue.push_back(*p);
                }
            }
        }
        seen
    }

    /// `Ac(S)`: states reachable from an initial state.
    pub fn accessible_part(&self) -> TransitionSystem {
        let reach = self.forward_closure(&self.initial);
        self.restrict(&reach)
    }

    /// `CoAc(S)`: states from which a marked state is reachable.
    pub fn coaccessible_part(&self) -> TransitionSystem {
        let coreach = self.backward_closure(&self.marked);
        self.restrict(&coreach)
    }

    /// `Trim(S) = CoAc(Ac(S))`.
    pub fn trim(&self) -> TransitionSystem {
        self.accessible_part().coaccessible_part()
    }

    pub fn is_accessible(&self) -> bool {
        self.forward_closure(&self.initial).len() == self.states.len()
    }

    /// Every state reachable from an initial state can reach a marked state.
    pub fn is_nonblocking(&self) -> bool {
        let reach = self.forward_closure(&self.initial);
        let coreach = self.backward_closure(&self.marked);
        reach.is_subset(&coreach)
    }

    /// `S' ⊑ S`.
    pub fn is_subsystem_of(&self, other: &TransitionSystem) -> bool {
        self.states.is_subset(&other.states)
            && self.initial.is_subset(&other.initial)
            && self.marked.is_subset(&other.marked)
            && self.inputs.is_subset(&other.inputs)
            && self.transitions.is_subset(&other.transitions)
            && self.outputs.iter().all(|(s, o)| other.outputs.get(s) == Some(o))
    }

    /// All marked output words of length at most `max_len`, where the length
    /// counts the states of the run (so a marked initial state gives a word of
    /// length one).
    pub fn marked_words(&self, max_len: usize) -> BTreeSet<Vec<OutputLabel>> {
        let mut out = BTreeSet::new();
        if max_len == 0 {
            return out;
        }
        let mut layer: BTreeMap<Vec<OutputLabel>, BTreeSet<StateId>> = BTreeMap::new();
        for s in &self.initial {
            layer.entry(vec![self.outputs[s].clone()]).or_default().insert(*s);
        }
        for len in 1..=max_len {
            for (word, states) in &layer {
                if states.iter().any(|s| self.marked.contains(s)) {
                    out.insert(word.clone());
                }
            }
            if len == max_len {
                break;
            }
            let mut next: BTreeMap<Vec<OutputLabel>, BTreeSet<StateId>> = BTreeMap::new();
            for (word, states) in &layer {
                for s in states {
                    for t in self.successors(*s) {
                        let mut w = word.clone();
                        w.push(self.outputs[&t.dst].clone());
                        next.entry(w).or_default().insert(t.dst);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        out
    }

    /// All marked input words of length at most `max_len` (length counts
    /// inputs; the empty word is included when an initial state is marked).
    pub fn marked_input_words(&self, max_len: usize) -> BTreeSet<Vec<SymbolId>> {
        let mut out = BTreeSet::new();
        let mut layer: BTreeMap<Vec<SymbolId>, BTreeSet<StateId>> = BTreeMap::new();
        layer.insert(Vec::new(), self.initial.clone());
        for len in 0..=max_len {
            for (word, states) in &layer {
                if states.iter().any(|s| self.marked.contains(s)) {
                    out.insert(word.clone());
                }
            }
            if len == max_len {
                break;
            }
            let mut next: BTreeMap<Vec<SymbolId>, BTreeSet<StateId>> = BTreeMap::new();
            for (word, states) in &layer {
                for s in states {
                    for t in self.successors(*s) {
                        let mut w = word.clone();
                        w.push(t.input);
                        next.entry(w).or_default().insert(t.dst);
                    }
                }
            }
            if next.is_empty() {
                break;
            }
            layer = next;
        }
        out
    }

    /// Membership of an input word in the marked input language.
    pub fn accepts_input_word(&self, word: &[SymbolId]) -> bool {
        let mut current: BTreeSet<StateId> = self.initial.clone();
        for a in word {
            current = current
                .iter()
                .flat_map(|s| self.successors(*s).filter(|t| t.input == *a).map(|t| t.dst))
                .collect();
            if current.is_empty() {
                return false;
            }
        }
        current.iter().any(|s| self.marked.contains(s))
    }
}
