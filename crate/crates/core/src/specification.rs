//! Specification automata over exact set-points and the derived system whose
//! states are the spec transitions.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{
    combine, AutomataError, AutomatonFile, CombineOp, OutputLabel, Recognizer, StateId, SymbolTable, Transition,
    TransitionSystem,
};
use crate::decimal::{Dec, DecError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpecError {
    #[error("specification word is empty")]
    EmptyWord,
    #[error("specification marks no word")]
    EmptyLanguage,
    #[error("specification automaton is not {0}")]
    Invariant(&'static str),
    #[error("set-points have inconsistent dimensions ({0} and {1})")]
    MixedDimensions(usize, usize),
    #[error("output dimension {got} does not match the network dimension {expected}")]
    Dimension { got: usize, expected: usize },
    #[error("spec file: {0}")]
    File(String),
    #[error(transparent)]
    Automata(#[from] AutomataError),
    #[error(transparent)]
    Decimal(#[from] DecError),
}

/// Deterministic, accessible and nonblocking recognizer whose input symbols
/// are exact set-points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecAutomaton {
    rec: Recognizer,
    dim: usize,
}

impl SpecAutomaton {
    pub fn new(rec: Recognizer) -> Result<SpecAutomaton, SpecError> {
        let ts = &rec.system;
        if ts.is_empty() || ts.marked().is_empty() {
            return Err(SpecError::EmptyLanguage);
        }
        if !ts.is_deterministic() {
            return Err(SpecError::Invariant("deterministic"));
        }
        if !ts.is_accessible() {
            return Err(SpecError::Invariant("accessible"));
        }
        if !ts.is_nonblocking() {
            return Err(SpecError::Invariant("nonblocking"));
        }
        let mut dim = None;
        for s in ts.inputs() {
            let p = rec.symbols.point(*s).ok_or(AutomataError::UnknownSymbol(*s))?;
            match dim {
                None => dim = Some(p.len()),
                Some(d) if d != p.len() => return Err(SpecError::MixedDimensions(d, p.len())),
                _ => {}
            }
        }
        Ok(SpecAutomaton { dim: dim.unwrap_or(0), rec })
    }

    pub fn system(&self) -> &TransitionSystem {
        &self.rec.system
    }

    pub fn symbols(&self) -> &SymbolTable {
        &self.rec.symbols
    }

    pub fn recognizer(&self) -> &Recognizer {
        &self.rec
    }

    pub fn point_dim(&self) -> usize {
        self.dim
    }

    /// The set-points actually used by some transition.
    pub fn alphabet(&self) -> Vec<Vec<Dec>> {
        let used: BTreeSet<Vec<Dec>> =
            self.rec.system.transitions().iter().filter_map(|t| self.rec.symbols.point(t.input).map(<[Dec]>::to_vec)).collect();
        used.into_iter().collect()
    }

    /// Marked set-point words up to `max_len` symbols.
    pub fn marked_point_words(&self, max_len: usize) -> BTreeSet<Vec<Vec<Dec>>> {
        self.rec
            .system
            .marked_input_words(max_len)
            .into_iter()
            .map(|w| w.iter().map(|s| self.rec.symbols.point(*s).expect("symbol in table").to_vec()).collect())
            .collect()
    }
}

fn check_word(word: &[Vec<Dec>]) -> Result<(), SpecError> {
    let first = word.first().ok_or(SpecError::EmptyWord)?;
    if let Some(p) = word.iter().find(|p| p.len() != first.len()) {
        return Err(SpecError::MixedDimensions(first.len(), p.len()));
    }
    Ok(())
}

fn tag_outputs(n: usize) -> BTreeMap<StateId, OutputLabel> {
    (0..n).map(|s| (s, OutputLabel::Tag(format!("s{s}")))).collect()
}

fn word_over(word: &[Vec<Dec>], symbols: SymbolTable, plus: bool) -> Result<SpecAutomaton, SpecError> {
    check_word(word)?;
    let len = word.len();
    let ids: Vec<usize> = word.iter().map(|p| symbols.id_of(p).expect("word symbols are in the table")).collect();
    let mut transitions: Vec<Transition> = ids.iter().enumerate().map(|(t, s)| Transition::new(t, *s, t + 1)).collect();
    if plus {
        transitions.push(Transition::new(len, ids[0], 1));
    }
    let system = TransitionSystem::new(0..=len, [0], [len], symbols.ids(), transitions, tag_outputs(len + 1))?;
    SpecAutomaton::new(Recognizer { system, symbols })
}

/// Chain automaton marking exactly `word`.
pub fn build_word(word: &[Vec<Dec>]) -> Result<SpecAutomaton, SpecError> {
    word_over(word, SymbolTable::from_points(word.iter().cloned()), false)
}

/// Automaton marking `q q*`: states `s_0..s_L` along the word, plus the loop
/// `s_L -> s_1` on the first symbol.
pub fn build_word_plus(word: &[Vec<Dec>]) -> Result<SpecAutomaton, SpecError> {
    word_over(word, SymbolTable::from_points(word.iter().cloned()), true)
}

/// The system whose states are the transitions of a spec automaton. State
/// `k` houses the `k`-th transition in `(src, input, dst)` order; its output
/// is the set-point read by that transition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransitionSpec {
    system: TransitionSystem,
    housed: Vec<Transition>,
    points: Vec<Vec<Dec>>,
}

impl TransitionSpec {
    pub fn system(&self) -> &TransitionSystem {
        &self.system
    }

    pub fn len(&self) -> usize {
        self.housed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.housed.is_empty()
    }

    /// `H_Q(state)`.
    pub fn point(&self, state: StateId) -> &[Dec] {
        &self.points[state]
    }

    pub fn housed(&self, state: StateId) -> Transition {
        self.housed[state]
    }

    /// Coordinates of `H_Q(state)` that belong to component `i`.
    pub fn projection(&self, state: StateId, dims: &[usize], i: usize) -> Result<Vec<Dec>, SpecError> {
        project_output(&self.points[state], dims, i)
    }
}

pub fn to_transition_spec(spec: &SpecAutomaton) -> TransitionSpec {
    let ts = spec.system();
    let housed: Vec<Transition> = ts.transitions().iter().copied().collect();
    let points: Vec<Vec<Dec>> =
        housed.iter().map(|t| spec.symbols().point(t.input).expect("symbol in table").to_vec()).collect();
    let mut by_src: BTreeMap<StateId, Vec<usize>> = BTreeMap::new();
    for (k, t) in housed.iter().enumerate() {
        by_src.entry(t.src).or_default().push(k);
    }
    let mut transitions = Vec::new();
    for (k, t) in housed.iter().enumerate() {
        for next in by_src.get(&t.dst).into_iter().flatten() {
            transitions.push(Transition::new(k, 0, *next));
        }
    }
    let initial: Vec<usize> = (0..housed.len()).filter(|k| ts.initial().contains(&housed[*k].src)).collect();
    let marked: Vec<usize> = (0..housed.len()).filter(|k| ts.marked().contains(&housed[*k].dst)).collect();
    let outputs = points.iter().enumerate().map(|(k, p)| (k, OutputLabel::Point(p.clone()))).collect();
    let system = TransitionSystem::new(0..housed.len(), initial, marked, [0], transitions, outputs)
        .expect("transition spec is well formed");
    TransitionSpec { system, housed, points }
}

/// Slice of a network-level point belonging to component `i`.
pub fn project_output(point: &[Dec], dims: &[usize], i: usize) -> Result<Vec<Dec>, SpecError> {
    let total: usize = dims.iter().sum();
    if point.len() != total || i >= dims.len() {
        return Err(SpecError::Dimension { got: point.len(), expected: total });
    }
    let start: usize = dims[..i].iter().sum();
    Ok(point[start..start + dims[i]].to_vec())
}

/// One coordinate of a set-point literal. The string `"..."` repeats the
/// previous coordinate up to the declared dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coord {
    Int(i64),
    Float(f64),
    Text(String),
}

pub type PointLiteral = Vec<Coord>;

const ELLIPSIS: &str = "...";

pub fn expand_point(lit: &[Coord], dim: Option<usize>) -> Result<Vec<Dec>, SpecError> {
    let mut out: Vec<Dec> = Vec::new();
    let mut ellipsis_at = None;
    for c in lit {
        match c {
            Coord::Text(s) if s.trim() == ELLIPSIS => {
                if out.is_empty() || ellipsis_at.is_some() {
                    return Err(SpecError::File("`...` must follow a value and appear once".into()));
                }
                ellipsis_at = Some(out.len());
            }
            Coord::Text(s) => out.push(s.trim().parse()?),
            Coord::Int(v) => out.push(Dec::from_int(*v)),
            Coord::Float(v) => out.push(Dec::from_f64_shortest(*v)?),
        }
    }
    if let Some(at) = ellipsis_at {
        let d = dim.ok_or_else(|| SpecError::File("`...` needs a dimension".into()))?;
        if d < out.len() {
            return Err(SpecError::File(format!("point has {} coordinates, dimension is {d}", out.len())));
        }
        let fill = out[at - 1];
        let tail = out.split_off(at);
        out.extend(std::iter::repeat_n(fill, d - out.len() - tail.len()));
        out.extend(tail);
    }
    match dim {
        Some(d) if d != out.len() => Err(SpecError::Dimension { got: out.len(), expected: d }),
        _ => Ok(out),
    }
}

/// Builder expression of a spec file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpecExpr {
    Word { word: Vec<PointLiteral> },
    WordPlus { word: Vec<PointLiteral> },
    Union { args: Vec<SpecExpr> },
    Concat { args: Vec<SpecExpr> },
    Product { args: Vec<SpecExpr> },
    Star { arg: Box<SpecExpr> },
    Complement { arg: Box<SpecExpr> },
    /// Explicit automaton in the JSON automaton format, path relative to
    /// the spec file.
    Automaton { path: PathBuf },
}

/// ```toml
/// dimension = 4
/// [spec]
/// kind = "word_plus"
/// word = [["19", "18", "..."], ["19", "18.5", "..."]]
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default)]
    pub dimension: Option<usize>,
    pub spec: SpecExpr,
}

enum Resolved {
    Word(Vec<Vec<Dec>>, bool),
    Node(CombineOp, Vec<Resolved>),
    Explicit(Recognizer),
}

impl SpecFile {
    pub fn from_toml(text: &str) -> Result<SpecFile, SpecError> {
        toml::from_str(text).map_err(|e| SpecError::File(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<SpecFile, SpecError> {
        let text = std::fs::read_to_string(path).map_err(|e| SpecError::File(format!("{}: {e}", path.display())))?;
        SpecFile::from_toml(&text)
    }

    /// Build the automaton. `dimension` overrides the file's dimension, so
    /// the same literal with `...` serves any network size.
    pub fn build(&self, base_dir: &Path, dimension: Option<usize>) -> Result<SpecAutomaton, SpecError> {
        let dim = dimension.or(self.dimension);
        let resolved = resolve(&self.spec, base_dir, dim)?;
        let mut points = BTreeSet::new();
        collect_points(&resolved, &mut points);
        let table = SymbolTable::from_points(points);
        let rec = realize(&resolved, &table)?;
        if rec.system.is_empty() {
            return Err(SpecError::EmptyLanguage);
        }
        SpecAutomaton::new(rec)
    }
}

fn resolve(e: &SpecExpr, base: &Path, dim: Option<usize>) -> Result<Resolved, SpecError> {
    let word = |w: &[PointLiteral]| w.iter().map(|p| expand_point(p, dim)).collect::<Result<Vec<_>, _>>();
    Ok(match e {
        SpecExpr::Word { word: w } => Resolved::Word(word(w)?, false),
        SpecExpr::WordPlus { word: w } => Resolved::Word(word(w)?, true),
        SpecExpr::Union { args } => Resolved::Node(CombineOp::Union, resolve_all(args, base, dim)?),
        SpecExpr::Concat { args } => Resolved::Node(CombineOp::Concat, resolve_all(args, base, dim)?),
        SpecExpr::Product { args } => Resolved::Node(CombineOp::Product, resolve_all(args, base, dim)?),
        SpecExpr::Star { arg } => Resolved::Node(CombineOp::Star, vec![resolve(arg, base, dim)?]),
        SpecExpr::Complement { arg } => Resolved::Node(CombineOp::Complement, vec![resolve(arg, base, dim)?]),
        SpecExpr::Automaton { path } => {
            let full = base.join(path);
            let text =
                std::fs::read_to_string(&full).map_err(|e| SpecError::File(format!("{}: {e}", full.display())))?;
            Resolved::Explicit(AutomatonFile::from_json(&text)?.to_recognizer()?)
        }
    })
}

fn resolve_all(args: &[SpecExpr], base: &Path, dim: Option<usize>) -> Result<Vec<Resolved>, SpecError> {
    args.iter().map(|a| resolve(a, base, dim)).collect()
}

fn collect_points(r: &Resolved, out: &mut BTreeSet<Vec<Dec>>) {
    match r {
        Resolved::Word(w, _) => out.extend(w.iter().cloned()),
        Resolved::Node(_, args) => args.iter().for_each(|a| collect_points(a, out)),
        Resolved::Explicit(rec) => out.extend(rec.symbols.points().iter().cloned()),
    }
}

fn realize(r: &Resolved, table: &SymbolTable) -> Result<Recognizer, SpecError> {
    match r {
        Resolved::Word(w, plus) => Ok(word_over(w, table.clone(), *plus)?.rec),
        Resolved::Node(op, args) => {
            let parts = args.iter().map(|a| realize(a, table)).collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&Recognizer> = parts.iter().collect();
            Ok(combine(*op, &refs)?)
        }
        Resolved::Explicit(rec) => {
            // Re-express input ids in the shared table.
            let map = |s: usize| table.id_of(rec.symbols.point(s).expect("symbol in table")).expect("collected");
            let ts = &rec.system;
            let system = TransitionSystem::new(
                ts.states().iter().copied(),
                ts.initial().iter().copied(),
                ts.marked().iter().copied(),
                table.ids(),
                ts.transitions().iter().map(|t| Transition::new(t.src, map(t.input), t.dst)),
                ts.outputs().clone(),
            )?;
            Ok(Recognizer { system, symbols: table.clone() })
        }
    }
}
