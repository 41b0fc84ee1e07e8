//! Regular-language combinators over marked input languages.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::{AutomataError, OutputLabel, StateId, SymbolId, SymbolTable, Transition, TransitionSystem};

/// A transition system read as a recognizer of its marked input language,
/// paired with the symbol table its input ids refer to.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Recognizer {
    pub system: TransitionSystem,
    pub symbols: SymbolTable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CombineOp {
    Union,
    Concat,
    Star,
    Product,
    Complement,
}

impl CombineOp {
    fn name(self) -> &'static str {
        match self {
            CombineOp::Union => "union",
            CombineOp::Concat => "concat",
            CombineOp::Star => "star",
            CombineOp::Product => "product",
            CombineOp::Complement => "complement",
        }
    }
}

#[derive(Default)]
struct Nfa {
    n: usize,
    initial: BTreeSet<usize>,
    marked: BTreeSet<usize>,
    edges: BTreeSet<(usize, SymbolId, usize)>,
    eps: BTreeSet<(usize, usize)>,
}

impl Nfa {
    fn from_system(ts: &TransitionSystem) -> Nfa {
        let index: BTreeMap<StateId, usize> = ts.states().iter().enumerate().map(|(k, s)| (*s, k)).collect();
        Nfa {
            n: index.len(),
            initial: ts.initial().iter().map(|s| index[s]).collect(),
            marked: ts.marked().iter().map(|s| index[s]).collect(),
            edges: ts.transitions().iter().map(|t| (index[&t.src], t.input, index[&t.dst])).collect(),
            eps: BTreeSet::new(),
        }
    }

    /// Embeds `other` with shifted ids; returns the offset.
    fn absorb(&mut self, other: Nfa) -> usize {
        let off = self.n;
        self.n += other.n;
        self.edges.extend(other.edges.into_iter().map(|(a, s, b)| (a + off, s, b + off)));
        self.eps.extend(other.eps.into_iter().map(|(a, b)| (a + off, b + off)));
        off
    }

    fn eps_closure(&self, set: &BTreeSet<usize>) -> BTreeSet<usize> {
        let mut out = set.clone();
        let mut stack: Vec<usize> = set.iter().copied().collect();
        while let Some(s) = stack.pop() {
            for (_, b) in self.eps.range((s, 0)..=(s, usize::MAX)) {
                if out.insert(*b) {
                    stack.push(*b);
                }
            }
        }
        out
    }
}

fn union_nfa(a: Nfa, b: Nfa) -> Nfa {
    let mut out = Nfa::default();
    let ia = a.initial.clone();
    let ma = a.marked.clone();
    let ib = b.initial.clone();
    let mb = b.marked.clone();
    let oa = out.absorb(a);
    let ob = out.absorb(b);
    out.initial = ia.iter().map(|s| s + oa).chain(ib.iter().map(|s| s + ob)).collect();
    out.marked = ma.iter().map(|s| s + oa).chain(mb.iter().map(|s| s + ob)).collect();
    out
}

fn concat_nfa(a: Nfa, b: Nfa) -> Nfa {
    let mut out = Nfa::default();
    let ia = a.initial.clone();
    let ma = a.marked.clone();
    let ib = b.initial.clone();
    let mb = b.marked.clone();
    let oa = out.absorb(a);
    let ob = out.absorb(b);
    for m in &ma {
        for i in &ib {
            out.eps.insert((m + oa, i + ob));
        }
    }
    out.initial = ia.iter().map(|s| s + oa).collect();
    out.marked = mb.iter().map(|s| s + ob).collect();
    out
}

fn star_nfa(a: Nfa) -> Nfa {
    let mut out = Nfa { n: 1, ..Nfa::default() };
    let ia = a.initial.clone();
    let ma = a.marked.clone();
    let oa = out.absorb(a);
    for i in &ia {
        out.eps.insert((0, i + oa));
    }
    for m in &ma {
        out.eps.insert((m + oa, 0));
    }
    out.initial.insert(0);
    out.marked.insert(0);
    out
}

/// Subset construction. States are numbered in breadth-first discovery order;
/// `complete` adds a sink so every (state, symbol) pair has a successor.
fn subset_construction(nfa: &Nfa, alphabet: &[SymbolId], complete: bool) -> TransitionSystem {
    let start = nfa.eps_closure(&nfa.initial);
    let mut ids: BTreeMap<BTreeSet<usize>, StateId> = BTreeMap::new();
    let mut order: Vec<BTreeSet<usize>> = Vec::new();
    let mut queue = VecDeque::new();
    ids.insert(start.clone(), 0);
    order.push(start.clone());
    queue.push_back(start);
    let mut transitions = BTreeSet::new();
    while let Some(set) = queue.pop_front() {
        let src = ids[&set];
        for &a in alphabet {
            let step: BTreeSet<usize> = set
                .iter()
                .flat_map(|s| nfa.edges.range((*s, a, 0)..=(*s, a, usize::MAX)).map(|e| e.2))
                .collect();
            let target = nfa.eps_closure(&step);
            if target.is_empty() && !complete {
                continue;
            }
            let dst = match ids.get(&target) {
                Some(d) => *d,
                None => {
                    let d = order.len();
                    ids.insert(target.clone(), d);
                    order.push(target.clone());
                    queue.push_back(target);
                    d
                }
            };
            transitions.insert(Transition::new(src, a, dst));
        }
    }
    let marked: Vec<StateId> = order
        .iter()
        .enumerate()
        .filter(|(_, set)| set.iter().any(|s| nfa.marked.contains(s)))
        .map(|(k, _)| k)
        .collect();
    let outputs = (0..order.len()).map(|k| (k, OutputLabel::Tag(format!("q{k}")))).collect();
    TransitionSystem::new(0..order.len(), [0], marked, alphabet.iter().copied(), transitions, outputs)
        .expect("subset construction yields a well-formed system")
}

/// Deterministic recognizer of the same marked input language (not trimmed).
pub fn determinize(r: &Recognizer) -> TransitionSystem {
    let alphabet: Vec<SymbolId> = r.symbols.ids().collect();
    subset_construction(&Nfa::from_system(&r.system), &alphabet, false)
}

fn product_dfa(a: &TransitionSystem, b: &TransitionSystem, alphabet: &[SymbolId]) -> TransitionSystem {
    let step = |ts: &TransitionSystem, s: StateId, x: SymbolId| ts.successors(s).find(|t| t.input == x).map(|t| t.dst);
    let mut nfa = Nfa::default();
    let mut ids: BTreeMap<(StateId, StateId), usize> = BTreeMap::new();
    let mut queue = VecDeque::new();
    for ia in a.initial() {
        for ib in b.initial() {
            let k = ids.len();
            ids.insert((*ia, *ib), k);
            nfa.initial.insert(k);
            queue.push_back((*ia, *ib));
        }
    }
    while let Some((sa, sb)) = queue.pop_front() {
        let src = ids[&(sa, sb)];
        if a.marked().contains(&sa) && b.marked().contains(&sb) {
            nfa.marked.insert(src);
        }
        for &x in alphabet {
            if let (Some(da), Some(db)) = (step(a, sa, x), step(b, sb, x)) {
                let dst = match ids.get(&(da, db)) {
                    Some(d) => *d,
                    None => {
                        let d = ids.len();
                        ids.insert((da, db), d);
                        queue.push_back((da, db));
                        d
                    }
                };
                nfa.edges.insert((src, x, dst));
            }
        }
    }
    nfa.n = ids.len();
    subset_construction(&nfa, alphabet, false)
}

fn finish(system: TransitionSystem, symbols: &SymbolTable) -> Recognizer {
    let alphabet: Vec<SymbolId> = symbols.ids().collect();
    let det = subset_construction(&Nfa::from_system(&system), &alphabet, false);
    Recognizer { system: det.trim(), symbols: symbols.clone() }
}

/// Applies a language operation to the operands' marked input languages.
/// The result is deterministic and trimmed.
pub fn combine(op: CombineOp, args: &[&Recognizer]) -> Result<Recognizer, AutomataError> {
    let first = args.first().ok_or(AutomataError::Arity(op.name(), 1, 0))?;
    let symbols = &first.symbols;
    if args.iter().any(|r| &r.symbols != symbols) {
        return Err(AutomataError::AlphabetMismatch);
    }
    for r in args {
        if let Some(bad) = r.system.inputs().iter().find(|i| **i >= symbols.len()) {
            return Err(AutomataError::UnknownSymbol(*bad));
        }
    }
    let alphabet: Vec<SymbolId> = symbols.ids().collect();
    match op {
        CombineOp::Star | CombineOp::Complement if args.len() != 1 => Err(AutomataError::Arity(op.name(), 1, args.len())),
        CombineOp::Union | CombineOp::Concat => {
            let mut acc = Nfa::from_system(&first.system);
            for r in &args[1..] {
                let next = Nfa::from_system(&r.system);
                acc = if op == CombineOp::Union { union_nfa(acc, next) } else { concat_nfa(acc, next) };
            }
            let det = subset_construction(&acc, &alphabet, false);
            Ok(Recognizer { system: det.trim(), symbols: symbols.clone() })
        }
        CombineOp::Star => {
            let det = subset_construction(&star_nfa(Nfa::from_system(&first.system)), &alphabet, false);
            Ok(Recognizer { system: det.trim(), symbols: symbols.clone() })
        }
        CombineOp::Product => {
            let mut acc = determinize(first);
            for r in &args[1..] {
                acc = product_dfa(&acc, &determinize(r), &alphabet);
            }
            Ok(finish(acc, symbols))
        }
        CombineOp::Complement => {
            let complete = subset_construction(&Nfa::from_system(&first.system), &alphabet, true);
            let flipped: BTreeSet<StateId> =
                complete.states().iter().filter(|s| !complete.marked().contains(s)).copied().collect();
            let sys = TransitionSystem::new(
                complete.states().iter().copied(),
                complete.initial().iter().copied(),
                flipped,
                complete.inputs().iter().copied(),
                complete.transitions().iter().copied(),
                complete.outputs().clone(),
            )?;
            Ok(Recognizer { system: sys.trim(), symbols: symbols.clone() })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decimal::Dec;

    fn table(n: usize) -> SymbolTable {
        SymbolTable::from_points((0..n).map(|k| vec![Dec::from_int(k as i64)]))
    }

    fn word(symbols: &SymbolTable, w: &[SymbolId]) -> Recognizer {
        let n = w.len() + 1;
        let system = TransitionSystem::new(
            0..n,
            [0],
            [n - 1],
            symbols.ids(),
            w.iter().enumerate().map(|(k, a)| Transition::new(k, *a, k + 1)),
            (0..n).map(|k| (k, OutputLabel::Tag(format!("s{k}")))).collect(),
        )
        .unwrap();
        Recognizer { system, symbols: symbols.clone() }
    }

    #[test]
    fn union_idempotent() {
        let t = table(2);
        let ab = word(&t, &[0, 1]);
        let u = combine(CombineOp::Union, &[&ab, &ab]).unwrap();
        let words = u.system.marked_input_words(6);
        assert_eq!(words.into_iter().collect::<Vec<_>>(), vec![vec![0, 1]]);
        assert!(u.system.is_deterministic());
    }

    #[test]
    fn star_of_single_symbol() {
        let t = table(2);
        let a = word(&t, &[0]);
        let s = combine(CombineOp::Star, &[&a]).unwrap();
        let words = s.system.marked_input_words(4);
        let expected: BTreeSet<Vec<SymbolId>> = (0..=4).map(|k| vec![0; k]).collect();
        assert_eq!(words, expected);
    }

    #[test]
    fn concat_and_complement() {
        let t = table(2);
        let a = word(&t, &[0]);
        let b = word(&t, &[1]);
        let ab = combine(CombineOp::Concat, &[&a, &b]).unwrap();
        assert!(ab.system.accepts_input_word(&[0, 1]));
        assert!(!ab.system.accepts_input_word(&[0]));
        let not_ab = combine(CombineOp::Complement, &[&ab]).unwrap();
        assert!(!not_ab.system.accepts_input_word(&[0, 1]));
        assert!(not_ab.system.accepts_input_word(&[]));
        assert!(not_ab.system.accepts_input_word(&[1, 1, 0]));
    }

    #[test]
    fn mismatch_and_arity() {
        let a = word(&table(2), &[0]);
        let b = word(&table(3), &[0]);
        assert_eq!(combine(CombineOp::Union, &[&a, &b]).unwrap_err(), AutomataError::AlphabetMismatch);
        assert!(matches!(combine(CombineOp::Star, &[&a, &a]), Err(AutomataError::Arity(..))));
        assert!(matches!(combine(CombineOp::Union, &[]), Err(AutomataError::Arity(..))));
    }
}
