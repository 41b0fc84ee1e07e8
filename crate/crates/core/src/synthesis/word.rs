//! Choosing one marked word of the trimmed controlled spec.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SynthesisError;
use crate::automata::{OutputLabel, StateId, Transition, TransitionSystem};
use crate::decimal::Dec;
use crate::specification::TransitionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum WordPolicy {
    /// Fewest symbols; ties go to smaller state ids.
    Shortest,
    /// `k`-th marked word (0-based) in length-lexicographic order.
    Index(usize),
    /// Shortest word whose run visits marked states exactly `r` times.
    Unroll(usize),
}

impl fmt::Display for WordPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordPolicy::Shortest => f.write_str("shortest"),
            WordPolicy::Index(k) => write!(f, "index:{k}"),
            WordPolicy::Unroll(r) => write!(f, "unroll:{r}"),
        }
    }
}

impl FromStr for WordPolicy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || format!("unknown word policy `{s}` (expected shortest, index:K or unroll:R)");
        match s.split_once(':') {
            None if s == "shortest" => Ok(WordPolicy::Shortest),
            Some(("index", k)) => k.parse().map(WordPolicy::Index).map_err(|_| bad()),
            Some(("unroll", r)) => match r.parse() {
                Ok(0) | Err(_) => Err(bad()),
                Ok(r) => Ok(WordPolicy::Unroll(r)),
            },
            _ => Err(bad()),
        }
    }
}

impl TryFrom<String> for WordPolicy {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<WordPolicy> for String {
    fn from(p: WordPolicy) -> String {
        p.to_string()
    }
}

/// A marked word together with the spec-system run producing it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectedWord {
    pub run: Vec<StateId>,
    pub word: Vec<Vec<Dec>>,
}

impl SelectedWord {
    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// Spec-system transition taken at step `t`.
    pub fn step(&self, t: usize) -> Transition {
        Transition::new(self.run[t], 0, self.run[t + 1])
    }

    /// Chain system with one state per symbol, marking exactly this word.
    pub fn system(&self) -> TransitionSystem {
        let n = self.word.len();
        TransitionSystem::new(
            0..n,
            [0],
            n.checked_sub(1),
            [0],
            (1..n).map(|t| Transition::new(t - 1, 0, t)),
            self.word.iter().enumerate().map(|(t, p)| (t, OutputLabel::Point(p.clone()))).collect(),
        )
        .expect("chain is well formed")
    }
}

fn to_word(sq: &TransitionSpec, run: Vec<StateId>) -> SelectedWord {
    let word = run.iter().map(|s| sq.point(*s).to_vec()).collect();
    SelectedWord { run, word }
}

/// Breadth-first search over `(state, tag)` nodes; returns the first goal
/// node reached, expanding in ascending order.
fn bfs<T: Ord + Copy>(
    ts: &TransitionSystem,
    start: impl Fn(StateId) -> Option<T>,
    step: impl Fn(T, StateId) -> Option<T>,
    goal: impl Fn(StateId, T) -> bool,
) -> Option<Vec<StateId>> {
    let mut parent: BTreeMap<(StateId, T), Option<(StateId, T)>> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for s in ts.initial() {
        if let Some(tag) = start(*s) {
            parent.insert((*s, tag), None);
            queue.push_back((*s, tag));
        }
    }
    while let Some(node) = queue.pop_front() {
        if goal(node.0, node.1) {
            let mut run = vec![node.0];
            let mut cur = node;
            while let Some(Some(p)) = parent.get(&cur) {
                run.push(p.0);
                cur = *p;
            }
            run.reverse();
            return Some(run);
        }
        for t in ts.successors(node.0) {
            if let Some(tag) = step(node.1, t.dst) {
                let next = (t.dst, tag);
                if let std::collections::btree_map::Entry::Vacant(e) = parent.entry(next) {
                    e.insert(Some(node));
                    queue.push_back(next);
                }
            }
        }
    }
    None
}

/// Smallest-id run of `ts` producing `word` and ending in a marked state.
fn run_for_word(ts: &TransitionSystem, word: &[OutputLabel]) -> Option<Vec<StateId>> {
    let mut layers: Vec<BTreeSet<StateId>> = Vec::with_capacity(word.len());
    layers.push(ts.initial().iter().copied().filter(|s| ts.output(*s) == Some(&word[0])).collect());
    for sym in &word[1..] {
        let prev = layers.last().expect("nonempty");
        let next: BTreeSet<StateId> = prev
            .iter()
            .flat_map(|s| ts.successors(*s).map(|t| t.dst))
            .filter(|s| ts.output(*s) == Some(sym))
            .collect();
        layers.push(next);
    }
    let mut cur = *layers.last()?.iter().find(|s| ts.marked().contains(s))?;
    let mut run = vec![cur];
    for layer in layers[..layers.len() - 1].iter().rev() {
        cur = *layer.iter().find(|s| ts.successors(**s).any(|t| t.dst == cur))?;
        run.push(cur);
    }
    run.reverse();
    Some(run)
}

pub fn select_word(trim: &TransitionSystem, sq: &TransitionSpec, policy: WordPolicy) -> Result<SelectedWord, SynthesisError> {
    if trim.is_empty() {
        return Err(SynthesisError::Unenforceable);
    }
    let marked = |s: StateId| trim.marked().contains(&s);
    let run = match policy {
        WordPolicy::Shortest => bfs(trim, |_| Some(()), |_, _| Some(()), |s, _| marked(s)),
        WordPolicy::Unroll(r) => bfs(
            trim,
            |s| Some(marked(s) as usize),
            |c, s| {
                let c = c + marked(s) as usize;
                (c <= r).then_some(c)
            },
            |s, c| marked(s) && c == r,
        ),
        WordPolicy::Index(k) => {
            let bound = 2 * trim.states().len() * (k + 1) + 2;
            let mut words: Vec<Vec<OutputLabel>> = trim.marked_words(bound).into_iter().collect();
            words.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
            let w = words
                .get(k)
                .ok_or_else(|| SynthesisError::Word(format!("only {} marked words up to length {bound}", words.len())))?;
            run_for_word(trim, w)
        }
    };
    run.map(|r| to_word(sq, r)).ok_or_else(|| SynthesisError::Word(format!("no marked word for policy {policy}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heating;
    use crate::specification::{build_word, build_word_plus, to_transition_spec};

    #[test]
    fn heating_word_policies() {
        let q = heating::schedule_word(4);
        let sq = to_transition_spec(&build_word_plus(&q).unwrap());
        let trim = sq.system().trim();
        let w = select_word(&trim, &sq, WordPolicy::Shortest).unwrap();
        assert_eq!(w.word, q);
        let w2 = select_word(&trim, &sq, WordPolicy::Unroll(2)).unwrap();
        assert_eq!(w2.word, [q.clone(), q.clone()].concat());
        let w1 = select_word(&trim, &sq, WordPolicy::Index(1)).unwrap();
        assert_eq!(w1.word.len(), 24);
        assert_eq!(w.system().marked_words(30).len(), 1);
    }

    #[test]
    fn single_word_any_policy() {
        let word = vec![vec![Dec::ONE], vec![Dec::ZERO]];
        let sq = to_transition_spec(&build_word(&word).unwrap());
        let trim = sq.system().trim();
        for p in [WordPolicy::Shortest, WordPolicy::Index(0), WordPolicy::Unroll(1)] {
            assert_eq!(select_word(&trim, &sq, p).unwrap().word, word);
        }
        assert!(select_word(&trim, &sq, WordPolicy::Index(1)).is_err());
        assert_eq!(select_word(&TransitionSystem::empty(), &sq, WordPolicy::Shortest), Err(SynthesisError::Unenforceable));
    }

    #[test]
    fn policy_parsing() {
        assert_eq!("unroll:3".parse::<WordPolicy>().unwrap(), WordPolicy::Unroll(3));
        assert_eq!("index:0".parse::<WordPolicy>().unwrap(), WordPolicy::Index(0));
        assert!("unroll:0".parse::<WordPolicy>().is_err());
        assert!("longest".parse::<WordPolicy>().is_err());
    }
}
