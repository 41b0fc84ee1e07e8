//! Closed-loop execution of the network with synthesized controllers and the
//! checks applied to the resulting traces.

use std::collections::BTreeSet;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{OutputLabel, StateId, TransitionSystem};
use crate::decimal::Dec;
use crate::plant::{NetworkModel, PlantError};
use crate::synthesis::{CenController, DecControllerSet, Region, RegionSet};

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("controller blocks at step {t}: component {component} has no admissible input")]
    Blocking { t: usize, component: usize },
    #[error("controller state {0} has no successor and is not marked")]
    Stuck(StateId),
    #[error("word has {word} symbols but the trace has {trace} states")]
    LengthMismatch { word: usize, trace: usize },
    #[error("controller does not match the network: {0}")]
    Mismatch(String),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error("trace export: {0}")]
    Export(String),
}

/// Rule for resolving a set-valued choice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Pick {
    #[default]
    Min,
    Max,
    Seeded(u64),
}

impl fmt::Display for Pick {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Pick::Min => f.write_str("min"),
            Pick::Max => f.write_str("max"),
            Pick::Seeded(s) => write!(f, "seeded:{s}"),
        }
    }
}

impl FromStr for Pick {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.split_once(':') {
            None if s == "min" => Ok(Pick::Min),
            None if s == "max" => Ok(Pick::Max),
            Some(("seeded", v)) => v.parse().map(Pick::Seeded).map_err(|e| format!("bad seed `{v}`: {e}")),
            _ => Err(format!("unknown pick rule `{s}` (expected min, max or seeded:S)")),
        }
    }
}

impl TryFrom<String> for Pick {
    type Error = String;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Pick> for String {
    fn from(p: Pick) -> String {
        p.to_string()
    }
}

struct Chooser {
    pick: Pick,
    rng: Option<ChaCha8Rng>,
}

impl Chooser {
    fn new(pick: Pick) -> Chooser {
        let rng = match pick {
            Pick::Seeded(s) => Some(ChaCha8Rng::seed_from_u64(s)),
            _ => None,
        };
        Chooser { pick, rng }
    }

    /// Index into `items` (nonempty) per the rule; ordering by `key`.
    fn choose<T, K: Ord>(&mut self, items: &[T], key: impl Fn(&T) -> K) -> usize {
        let mut order: Vec<usize> = (0..items.len()).collect();
        order.sort_by_key(|k| key(&items[*k]));
        match self.pick {
            Pick::Min => order[0],
            Pick::Max => order[order.len() - 1],
            Pick::Seeded(_) => order[self.rng.as_mut().expect("seeded").gen_range(0..order.len())],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedLoopTrace {
    pub states: Vec<Vec<f64>>,
    pub controller_states: Vec<StateId>,
    /// `inputs[t][i]`, one entry per transition.
    pub inputs: Vec<Vec<Vec<Dec>>>,
    /// Set-point at each time.
    pub outputs: Vec<Vec<Dec>>,
    /// `|x(t) - q_t|` in the sup-norm.
    pub deviations: Vec<f64>,
    pub warnings: Vec<String>,
}

impl ClosedLoopTrace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn max_deviation(&self) -> f64 {
        self.deviations.iter().copied().fold(0.0, f64::max)
    }
}

fn deviation(x: &[f64], q: &[Dec]) -> f64 {
    x.iter().zip(q).map(|(a, b)| (a - b.to_f64()).abs()).fold(0.0, f64::max)
}

fn resolve_input(model: &NetworkModel, i: usize, u: &[Dec]) -> Result<usize, RuntimeError> {
    model
        .inputs(i)
        .index_of(u)
        .ok_or_else(|| RuntimeError::Plant(PlantError::InputNotInSet { component: i, input: u.to_vec() }))
}

fn check_dims(model: &NetworkModel, dims: &[usize], x0: &[f64]) -> Result<(), RuntimeError> {
    if dims != model.dims() {
        return Err(RuntimeError::Mismatch(format!("controller dims {dims:?}, network dims {:?}", model.dims())));
    }
    if x0.len() != model.total_dim() || x0.iter().any(|v| !v.is_finite()) {
        return Err(RuntimeError::Mismatch("initial state has the wrong length or is not finite".into()));
    }
    Ok(())
}

/// Apply one joint input given as exact points; returns the successor.
fn advance(model: &NetworkModel, x: &[f64], u: &[Vec<Dec>]) -> Result<Vec<f64>, RuntimeError> {
    let idx = u.iter().enumerate().map(|(i, ui)| resolve_input(model, i, ui)).collect::<Result<Vec<_>, _>>()?;
    Ok(model.step_by_index(x, &idx))
}

/// Run the local controllers along their chain from `x0` to the marked state.
pub fn run_dec(model: &NetworkModel, ctrl: &DecControllerSet, x0: &[f64], pick: Pick) -> Result<ClosedLoopTrace, RuntimeError> {
    check_dims(model, &ctrl.dims, x0)?;
    if ctrl.inputs.len() + 1 != ctrl.word.len() {
        return Err(RuntimeError::Mismatch(format!(
            "{} input steps for a word of {} symbols",
            ctrl.inputs.len(),
            ctrl.word.len()
        )));
    }
    let mut chooser = Chooser::new(pick);
    let mut x = x0.to_vec();
    let mut trace = ClosedLoopTrace {
        states: vec![x.clone()],
        controller_states: vec![0],
        inputs: Vec::new(),
        outputs: vec![ctrl.word.word[0].clone()],
        deviations: vec![deviation(&x, &ctrl.word.word[0])],
        warnings: Vec::new(),
    };
    if !ctrl.initial_region.contains(x0) {
        trace.warnings.push("initial state outside the initial region; no accuracy guarantee".into());
    }
    for (t, per) in ctrl.inputs.iter().enumerate() {
        if per.len() != model.n_components() {
            return Err(RuntimeError::Mismatch(format!("step {t} has {} components", per.len())));
        }
        let mut u = Vec::with_capacity(per.len());
        for (i, set) in per.iter().enumerate() {
            if set.is_empty() {
                return Err(RuntimeError::Blocking { t, component: i });
            }
            u.push(set[chooser.choose(set, |p| p.clone())].clone());
        }
        x = advance(model, &x, &u)?;
        let q = &ctrl.word.word[t + 1];
        trace.deviations.push(deviation(&x, q));
        trace.states.push(x.clone());
        trace.controller_states.push(t + 1);
        trace.outputs.push(q.clone());
        trace.inputs.push(u);
    }
    Ok(trace)
}

/// Run the centralized controller from `x0`. The controller starts in the
/// first initial state whose region contains `x0`. With `steps = None` the
/// run stops at the first marked state; otherwise it takes exactly `steps`
/// transitions.
pub fn run_cen(
    model: &NetworkModel,
    ctrl: &CenController,
    x0: &[f64],
    successor_pick: Pick,
    input_pick: Pick,
    steps: Option<usize>,
) -> Result<ClosedLoopTrace, RuntimeError> {
    check_dims(model, &ctrl.dims, x0)?;
    let mut warnings = Vec::new();
    let start = ctrl
        .initial
        .iter()
        .copied()
        .find(|s| Region::contains(&region_for(ctrl, *s), x0))
        .or_else(|| {
            warnings.push("initial state outside every initial region; no accuracy guarantee".to_string());
            ctrl.initial.first().copied()
        })
        .ok_or_else(|| RuntimeError::Mismatch("controller has no initial state".into()))?;
    let mut succ_chooser = Chooser::new(successor_pick);
    let mut input_chooser = Chooser::new(input_pick);
    let mut s = start;
    let mut x = x0.to_vec();
    let out = |s: StateId| ctrl.outputs.get(&s).cloned().ok_or(RuntimeError::Mismatch(format!("state {s} has no output")));
    let q0 = out(s)?;
    let mut trace = ClosedLoopTrace {
        states: vec![x.clone()],
        controller_states: vec![s],
        inputs: Vec::new(),
        deviations: vec![deviation(&x, &q0)],
        outputs: vec![q0],
        warnings,
    };
    let mut t = 0;
    loop {
        match steps {
            None if ctrl.is_marked(s) => break,
            Some(k) if t == k => break,
            _ => {}
        }
        let edges: Vec<_> = ctrl.successors(s).collect();
        if edges.is_empty() {
            return Err(RuntimeError::Stuck(s));
        }
        let edge = edges[succ_chooser.choose(&edges, |e| e.dst)];
        let mut u = Vec::with_capacity(edge.inputs.len());
        for (i, set) in edge.inputs.iter().enumerate() {
            if set.is_empty() {
                return Err(RuntimeError::Blocking { t, component: i });
            }
            u.push(set[input_chooser.choose(set, |p| p.clone())].clone());
        }
        x = advance(model, &x, &u)?;
        s = edge.dst;
        let q = out(s)?;
        trace.deviations.push(deviation(&x, &q));
        trace.states.push(x.clone());
        trace.controller_states.push(s);
        trace.outputs.push(q);
        trace.inputs.push(u);
        t += 1;
    }
    Ok(trace)
}

fn region_for(ctrl: &CenController, s: StateId) -> Region {
    let center = &ctrl.outputs[&s];
    ctrl.initial_regions
        .boxes
        .iter()
        .find(|b| {
            b.center.len() == center.len()
                && b.lower.iter().zip(&b.upper).zip(center).all(|((l, u), c)| l <= c && c <= u)
        })
        .cloned()
        .unwrap_or_else(|| ctrl.initial_regions.boxes[0].clone())
}

/// Slack allowed on `d(t) <= theta` for rounding in the dynamics.
pub const DEVIATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnforcementViolation {
    InitialOutside,
    FinalOutside,
    Deviation { t: usize, deviation: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub enforced: bool,
    pub max_deviation: f64,
    pub first_violation: Option<EnforcementViolation>,
}

/// Whether the trace starts in `initial`, ends in `final_`, and stays within
/// `theta` of `word` at every time.
pub fn verify_enforcement(
    trace: &ClosedLoopTrace,
    word: &[Vec<Dec>],
    theta: f64,
    initial: &RegionSet,
    final_: &RegionSet,
) -> Result<Verdict, RuntimeError> {
    if word.len() != trace.len() {
        return Err(RuntimeError::LengthMismatch { word: word.len(), trace: trace.len() });
    }
    let devs: Vec<f64> = trace.states.iter().zip(word).map(|(x, q)| deviation(x, q)).collect();
    let max_deviation = devs.iter().copied().fold(0.0, f64::max);
    let first_violation = if !initial.contains(&trace.states[0]) {
        Some(EnforcementViolation::InitialOutside)
    } else if let Some(t) = devs.iter().position(|d| *d > theta + DEVIATION_TOL) {
        Some(EnforcementViolation::Deviation { t, deviation: devs[t] })
    } else if !final_.contains(trace.states.last().expect("nonempty")) {
        Some(EnforcementViolation::FinalOutside)
    } else {
        None
    };
    Ok(Verdict { enforced: first_violation.is_none(), max_deviation, first_violation })
}

/// Words the centralized closed loop can shadow: the marked output words of
/// the trimmed centralized spec system.
pub fn enforced_language(trim: &TransitionSystem, max_len: usize) -> BTreeSet<Vec<OutputLabel>> {
    trim.marked_words(max_len)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloSummary {
    pub samples: u64,
    pub seed: u64,
    pub passed: u64,
    pub all_pass: bool,
    pub max_deviation: f64,
    /// Sample indices that failed, ascending.
    pub failures: Vec<u64>,
}

/// Run `samples` traces from initial states drawn uniformly in the initial
/// region, sample `k` drawing from its own ChaCha8 stream.
pub fn monte_carlo_dec(
    model: &NetworkModel,
    ctrl: &DecControllerSet,
    theta: f64,
    samples: u64,
    seed: u64,
    pick: Pick,
) -> Result<MonteCarloSummary, RuntimeError> {
    let initial = RegionSet { boxes: vec![ctrl.initial_region.clone()] };
    let final_ = RegionSet { boxes: vec![ctrl.final_region.clone()] };
    let verdicts = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(k);
            let x0 = ctrl.initial_region.sample(&mut rng);
            let trace = run_dec(model, ctrl, &x0, pick)?;
            verify_enforcement(&trace, &ctrl.word.word, theta, &initial, &final_)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let failures: Vec<u64> = verdicts.iter().enumerate().filter(|(_, v)| !v.enforced).map(|(k, _)| k as u64).collect();
    Ok(MonteCarloSummary {
        samples,
        seed,
        passed: samples - failures.len() as u64,
        all_pass: failures.is_empty(),
        max_deviation: verdicts.iter().map(|v| v.max_deviation).fold(0.0, f64::max),
        failures,
    })
}

/// CSV with columns `t, x1.., u1.., q1.., deviation`. Inputs of the last
/// row are empty.
pub fn write_trace_csv<W: Write>(trace: &ClosedLoopTrace, out: W) -> Result<(), RuntimeError> {
    let err = |e: csv::Error| RuntimeError::Export(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    let nx = trace.states.first().map_or(0, Vec::len);
    let nu = trace.inputs.first().map_or(0, |u| u.iter().map(Vec::len).sum());
    let mut header = vec!["t".to_string()];
    header.extend((1..=nx).map(|k| format!("x{k}")));
    header.extend((1..=nu).map(|k| format!("u{k}")));
    header.extend((1..=nx).map(|k| format!("q{k}")));
    header.push("deviation".into());
    w.write_record(&header).map_err(err)?;
    for t in 0..trace.len() {
        let mut row = vec![t.to_string()];
        row.extend(trace.states[t].iter().map(|v| format!("{v:.6}")));
        match trace.inputs.get(t) {
            Some(u) => row.extend(u.iter().flatten().map(Dec::to_string)),
            None => row.extend(std::iter::repeat_n(String::new(), nu)),
        }
        row.extend(trace.outputs[t].iter().map(Dec::to_string));
        row.push(format!("{:.6}", trace.deviations[t]));
        w.write_record(&row).map_err(err)?;
    }
    w.flush().map_err(|e| RuntimeError::Export(e.to_string()))
}
