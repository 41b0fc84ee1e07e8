//! Controller extraction and the initial/final regions.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::feasibility::{ControlledSpec, FeasibilityTable};
use super::word::SelectedWord;
use super::SynthesisError;
use crate::abstraction::{symbolic_succ, GridPoint, Quantizer};
use crate::automata::{StateId, Transition};
use crate::decimal::{Dec, DecError};
use crate::plant::{GasCertificate, NetworkModel};
use crate::specification::{project_output, TransitionSpec};

/// Sublevel set `{x : V(x, center) <= radius}` of a weighted sup-norm,
/// stored as its box.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: Vec<Dec>,
    pub radius: f64,
    pub lower: Vec<Dec>,
    pub upper: Vec<Dec>,
}

impl Region {
    pub fn around(center: Vec<Dec>, weights: &[f64], radius: f64) -> Result<Region, DecError> {
        let mut lower = Vec::with_capacity(center.len());
        let mut upper = Vec::with_capacity(center.len());
        for (c, w) in center.iter().zip(weights) {
            let h = Dec::from_f64_shortest(radius / w)?;
            lower.push(c.checked_sub(h)?);
            upper.push(c.checked_add(h)?);
        }
        Ok(Region { center, radius, lower, upper })
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.center.len()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(v, (l, u))| l.to_f64() <= *v && *v <= u.to_f64())
    }

    pub fn center_f64(&self) -> Vec<f64> {
        self.center.iter().map(Dec::to_f64).collect()
    }

    /// Uniform sample from the closed box.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.lower.iter().zip(&self.upper).map(|(l, u)| rng.gen_range(l.to_f64()..=u.to_f64())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionSet {
    pub boxes: Vec<Region>,
}

impl RegionSet {
    pub fn contains(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains(x))
    }
}

/// Network-level grid center of a set-point.
fn grid_center(model: &NetworkModel, q: &Quantizer, point: &[Dec]) -> Result<Vec<Dec>, SynthesisError> {
    let mut out = Vec::with_capacity(point.len());
    for i in 0..model.n_components() {
        let p = project_output(point, model.dims(), i)?;
        out.extend(q.dequantize(&q.quantize_exact(i, &p))?);
    }
    Ok(out)
}

fn region_of(model: &NetworkModel, q: &Quantizer, cert: &GasCertificate, mu: f64, point: &[Dec]) -> Result<Region, SynthesisError> {
    Ok(Region::around(grid_center(model, q, point)?, &cert.weights, cert.alpha_lo.eval(mu))?)
}

fn grid_of(model: &NetworkModel, q: &Quantizer, point: &[Dec], i: usize) -> Result<GridPoint, SynthesisError> {
    Ok(q.quantize_exact(i, &project_output(point, model.dims(), i)?))
}

/// Check that input `u` of component `i` moves the quantized source point to
/// within `slack` cells of the quantized target point.
fn replay(
    model: &NetworkModel,
    q: &Quantizer,
    src: &[Dec],
    dst: &[Dec],
    i: usize,
    u: &[Dec],
    slack: u64,
) -> Result<bool, SynthesisError> {
    let xi = grid_of(model, q, src, i)?;
    let w = model.neighbors(i)?.iter().map(|j| grid_of(model, q, src, *j)).collect::<Result<Vec<_>, _>>()?;
    let next = symbolic_succ(model, q, i, &xi, &w, u)?;
    let target = grid_of(model, q, dst, i)?;
    Ok(next.index.iter().zip(&target.index).all(|(a, b)| (a - b).abs() <= slack as i64))
}

/// Open-loop local controllers sharing the chain of the selected word.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecControllerSet {
    pub word: SelectedWord,
    pub dims: Vec<usize>,
    /// `inputs[t][i]`: admissible inputs of component `i` at chain state `t`.
    pub inputs: Vec<Vec<Vec<Vec<Dec>>>>,
    pub initial_region: Region,
    pub final_region: Region,
    pub faithful: bool,
}

impl DecControllerSet {
    pub fn steps(&self) -> usize {
        self.inputs.len()
    }
}

pub fn extract_dec_controllers(
    model: &NetworkModel,
    q: &Quantizer,
    cert: &GasCertificate,
    mu: f64,
    sq: &TransitionSpec,
    word: &SelectedWord,
    table: &FeasibilityTable,
) -> Result<DecControllerSet, SynthesisError> {
    let mut inputs = Vec::with_capacity(word.len().saturating_sub(1));
    for t in 0..word.len().saturating_sub(1) {
        let tr = word.step(t);
        let pos = table.position(&tr).filter(|p| table.feasible(*p)).ok_or(SynthesisError::MissingTransition { step: t })?;
        let (src, dst) = (sq.point(tr.src), sq.point(tr.dst));
        let mut per = Vec::with_capacity(model.n_components());
        for i in 0..model.n_components() {
            let pts: Vec<Vec<Dec>> = table.candidates[pos][i].iter().map(|k| model.inputs(i).point(*k).to_vec()).collect();
            for u in &pts {
                if !replay(model, q, src, dst, i, u, table.slack)? {
                    return Err(SynthesisError::ReplayMismatch {
                        step: t,
                        component: i,
                        input: crate::automata::OutputLabel::Point(u.clone()).to_string(),
                    });
                }
            }
            per.push(pts);
        }
        inputs.push(per);
    }
    Ok(DecControllerSet {
        word: word.clone(),
        dims: model.dims().to_vec(),
        inputs,
        initial_region: region_of(model, q, cert, mu, &word.word[0])?,
        final_region: region_of(model, q, cert, mu, word.word.last().expect("nonempty word"))?,
        faithful: table.slack == 0,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenEdge {
    pub src: StateId,
    pub dst: StateId,
    /// Factored joint input set, one list per component.
    pub inputs: Vec<Vec<Vec<Dec>>>,
}

/// Controller replicating the trimmed centralized spec system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenController {
    pub dims: Vec<usize>,
    pub states: Vec<StateId>,
    pub initial: Vec<StateId>,
    pub marked: Vec<StateId>,
    pub outputs: BTreeMap<StateId, Vec<Dec>>,
    pub edges: Vec<CenEdge>,
    pub initial_regions: RegionSet,
    pub final_regions: RegionSet,
    pub faithful: bool,
}

impl CenController {
    pub fn successors(&self, s: StateId) -> impl Iterator<Item = &CenEdge> {
        self.edges.iter().filter(move |e| e.src == s)
    }

    pub fn is_marked(&self, s: StateId) -> bool {
        self.marked.contains(&s)
    }
}

fn region_set(
    model: &NetworkModel,
    q: &Quantizer,
    cert: &GasCertificate,
    mu: f64,
    sq: &TransitionSpec,
    states: impl Iterator<Item = StateId>,
) -> Result<RegionSet, SynthesisError> {
    let mut boxes: Vec<Region> = Vec::new();
    for s in states {
        let r = region_of(model, q, cert, mu, sq.point(s))?;
        if !boxes.iter().any(|b| b.center == r.center) {
            boxes.push(r);
        }
    }
    Ok(RegionSet { boxes })
}

pub fn extract_cen_controller(
    model: &NetworkModel,
    q: &Quantizer,
    cert: &GasCertificate,
    mu: f64,
    sq: &TransitionSpec,
    spec: &ControlledSpec,
    table: &FeasibilityTable,
) -> Result<CenController, SynthesisError> {
    let trim = &spec.trim;
    if trim.is_empty() {
        return Err(SynthesisError::Unenforceable);
    }
    let edges = trim
        .transitions()
        .iter()
        .map(|t| {
            let pos = table.position(&Transition::new(t.src, 0, t.dst)).ok_or(SynthesisError::MissingTransition { step: t.src })?;
            let inputs = (0..model.n_components())
                .map(|i| table.candidates[pos][i].iter().map(|k| model.inputs(i).point(*k).to_vec()).collect())
                .collect();
            Ok(CenEdge { src: t.src, dst: t.dst, inputs })
        })
        .collect::<Result<Vec<_>, SynthesisError>>()?;
    Ok(CenController {
        dims: model.dims().to_vec(),
        states: trim.states().iter().copied().collect(),
        initial: trim.initial().iter().copied().collect(),
        marked: trim.marked().iter().copied().collect(),
        outputs: trim.states().iter().map(|s| (*s, sq.point(*s).to_vec())).collect(),
        edges,
        initial_regions: region_set(model, q, cert, mu, sq, trim.initial().iter().copied())?,
        final_regions: region_set(model, q, cert, mu, sq, trim.marked().iter().copied())?,
        faithful: table.slack == 0,
    })
}

/// Two steps with equal set-points but different successors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropqWitness {
    pub t: usize,
    pub t_prime: usize,
}

/// First pair `t < t'` below the last step with `q_t = q_t'` and
/// `q_{t+1} != q_{t'+1}`, comparing each `t'` with the latest earlier
/// occurrence of the same set-point.
pub fn check_propq(word: &[Vec<Dec>]) -> Option<PropqWitness> {
    let last = word.len().saturating_sub(1);
    let mut seen: BTreeMap<&[Dec], usize> = BTreeMap::new();
    for tp in 0..last {
        if let Some(&t) = seen.get(word[tp].as_slice()) {
            if word[t + 1] != word[tp + 1] {
                return Some(PropqWitness { t, t_prime: tp });
            }
        }
        seen.insert(&word[tp], tp);
    }
    None
}

/// Local rule: when the component and its neighbors are inside the regions
/// of step `step`, apply one of `inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticRule {
    pub step: usize,
    pub own: Region,
    pub neighbors: Vec<(usize, Region)>,
    pub inputs: Vec<Vec<Dec>>,
}

/// Static local state feedback, one rule list per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StaticFeedback {
    pub rules: Vec<Vec<StaticRule>>,
}

impl StaticFeedback {
    /// Inputs of the first rule of component `i` matching the global state `x`.
    pub fn inputs_for(&self, model: &NetworkModel, i: usize, x: &[f64]) -> Option<&[Vec<Dec>]> {
        self.rules[i]
            .iter()
            .find(|r| {
                r.own.contains(model.component_slice(x, i))
                    && r.neighbors.iter().all(|(j, reg)| reg.contains(model.component_slice(x, *j)))
            })
            .map(|r| r.inputs.as_slice())
    }
}

pub fn check_propq_and_static(
    model: &NetworkModel,
    q: &Quantizer,
    cert: &GasCertificate,
    mu: f64,
    ctrl: &DecControllerSet,
) -> Result<Result<StaticFeedback, PropqWitness>, SynthesisError> {
    if let Some(w) = check_propq(&ctrl.word.word) {
        return Ok(Err(w));
    }
    let radius = cert.alpha_lo.eval(mu);
    let local = |point: &[Dec], j: usize| -> Result<Region, SynthesisError> {
        let g = grid_of(model, q, point, j)?;
        let o = model.offset(j);
        Ok(Region::around(q.dequantize(&g)?, &cert.weights[o..o + model.dim(j)], radius)?)
    };
    let mut rules = vec![Vec::new(); model.n_components()];
    for (t, per) in ctrl.inputs.iter().enumerate() {
        let point = &ctrl.word.word[t];
        for (i, inputs) in per.iter().enumerate() {
            let neighbors =
                model.neighbors(i)?.iter().map(|j| Ok((*j, local(point, *j)?))).collect::<Result<Vec<_>, SynthesisError>>()?;
            rules[i].push(StaticRule { step: t, own: local(point, i)?, neighbors, inputs: inputs.clone() });
        }
    }
    Ok(Ok(StaticFeedback { rules }))
}
