//! Feasibility of spec steps and the two synthesis loops.

use std::collections::BTreeSet;

use num_bigint::BigUint;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{SynthesisError, SynthesisOptions};
use crate::abstraction::{decode_joint, Quantizer};
use crate::automata::{Transition, TransitionSystem};
use crate::decimal::Dec;
use crate::plant::NetworkModel;
use crate::specification::TransitionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Dec,
    Cen,
}

/// Joint input set stored as the cross product of per-component sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FactoredSet {
    pub per_component: Vec<Vec<usize>>,
}

impl FactoredSet {
    pub fn cardinality(&self) -> BigUint {
        self.per_component.iter().map(|s| BigUint::from(s.len())).product()
    }

    pub fn is_empty(&self) -> bool {
        self.per_component.iter().any(Vec::is_empty)
    }

    pub fn contains(&self, u: &[usize]) -> bool {
        u.len() == self.per_component.len() && u.iter().zip(&self.per_component).all(|(k, s)| s.binary_search(k).is_ok())
    }

    /// All tuples in lexicographic order. Only sensible for small sets.
    pub fn tuples(&self) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![Vec::new()];
        for s in &self.per_component {
            out = out
                .into_iter()
                .flat_map(|p| {
                    s.iter().map(move |k| {
                        let mut q = p.clone();
                        q.push(*k);
                        q
                    })
                })
                .collect();
        }
        if self.is_empty() {
            out.clear();
        }
        out
    }
}

/// Candidate inputs per spec-system transition and component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityTable {
    /// Transitions of the spec system, in order.
    pub transitions: Vec<Transition>,
    /// `candidates[t][i]`: indices into `U_i`, ascending.
    pub candidates: Vec<Vec<Vec<usize>>>,
    pub slack: u64,
}

impl FeasibilityTable {
    pub fn len(&self) -> usize {
        self.transitions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.transitions.is_empty()
    }

    pub fn position(&self, t: &Transition) -> Option<usize> {
        self.transitions.binary_search(t).ok()
    }

    /// `I_i` of transition `t`.
    pub fn indicator(&self, t: usize, i: usize) -> bool {
        !self.candidates[t][i].is_empty()
    }

    /// `I` of transition `t`: conjunction over components.
    pub fn feasible(&self, t: usize) -> bool {
        self.candidates[t].iter().all(|c| !c.is_empty())
    }

    pub fn joint(&self, t: usize) -> FactoredSet {
        FactoredSet { per_component: self.candidates[t].clone() }
    }

    pub fn retained(&self) -> Vec<Transition> {
        (0..self.len()).filter(|t| self.feasible(*t)).map(|t| self.transitions[t]).collect()
    }
}

/// Grid data of one component for one spec step.
pub(crate) struct LocalStep {
    pub x: Vec<f64>,
    pub w: Vec<Vec<f64>>,
    pub target: Vec<i64>,
}

pub(crate) fn local_step(
    model: &NetworkModel,
    q: &Quantizer,
    sq: &TransitionSpec,
    t: Transition,
    i: usize,
) -> Result<LocalStep, SynthesisError> {
    let dims = model.dims();
    let grid = |state: usize, j: usize| -> Result<crate::abstraction::GridPoint, SynthesisError> {
        Ok(q.quantize_exact(j, &sq.projection(state, dims, j)?))
    };
    let x = q.dequantize_f64(&grid(t.src, i)?);
    let w = model.neighbors(i)?.iter().map(|j| Ok(q.dequantize_f64(&grid(t.src, *j)?))).collect::<Result<_, SynthesisError>>()?;
    let target = grid(t.dst, i)?.index;
    Ok(LocalStep { x, w, target })
}

impl LocalStep {
    /// Cell reached under input `k` of component `i`.
    pub(crate) fn reached(&self, model: &NetworkModel, q: &Quantizer, i: usize, k: usize, buf: &mut [f64]) -> Vec<i64> {
        let w: Vec<&[f64]> = self.w.iter().map(Vec::as_slice).collect();
        model.psi_into(i, &self.x, &w, model.inputs(i).value(k), buf);
        buf.iter().map(|v| q.cell(i, *v)).collect()
    }

    fn candidates(&self, model: &NetworkModel, q: &Quantizer, i: usize, slack: u64) -> Vec<usize> {
        let w: Vec<&[f64]> = self.w.iter().map(Vec::as_slice).collect();
        let mut buf = vec![0.0; model.dim(i)];
        let slack = slack as i64;
        (0..model.inputs(i).len())
            .filter(|k| {
                model.psi_into(i, &self.x, &w, model.inputs(i).value(*k), &mut buf);
                buf.iter().zip(&self.target).all(|(v, c)| (q.cell(i, *v) - c).abs() <= slack)
            })
            .collect()
    }
}

/// Inputs of component `i` that move the quantized source set-point to the
/// quantized target set-point of the spec-system transition `t`, with the
/// neighbors held at their quantized source set-points.
pub fn indicator_i(
    model: &NetworkModel,
    q: &Quantizer,
    sq: &TransitionSpec,
    t: Transition,
    i: usize,
    slack: u64,
) -> Result<Vec<Vec<Dec>>, SynthesisError> {
    let step = local_step(model, q, sq, t, i)?;
    Ok(step.candidates(model, q, i, slack).into_iter().map(|k| model.inputs(i).point(k).to_vec()).collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counters {
    /// Number of spec-system transitions examined.
    pub transitions: usize,
    /// `N_Q * sum_i |U_i|`.
    pub dec_evaluations: u64,
    /// `N_Q * prod_i |U_i|`, serialized as a decimal string.
    #[serde(with = "biguint_text")]
    pub cen_evaluations: BigUint,
    /// Tuples actually enumerated in literal joint mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub literal_evaluations: Option<u64>,
}

mod biguint_text {
    use num_bigint::BigUint;
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigUint, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigUint, D::Error> {
        String::deserialize(d)?.parse().map_err(de::Error::custom)
    }
}

impl Counters {
    fn nominal(model: &NetworkModel, transitions: usize) -> Counters {
        let sum: u64 = (0..model.n_components()).map(|i| model.inputs(i).len() as u64).sum();
        Counters {
            transitions,
            dec_evaluations: transitions as u64 * sum,
            cen_evaluations: BigUint::from(transitions) * model.joint_input_count(),
            literal_evaluations: None,
        }
    }
}

/// Subsystem of the spec system keeping the feasible transitions, and its trim.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlledSpec {
    pub mode: Mode,
    pub system: TransitionSystem,
    pub trim: TransitionSystem,
}

fn feasibility_table(
    model: &NetworkModel,
    q: &Quantizer,
    sq: &TransitionSpec,
    opts: &SynthesisOptions,
) -> Result<FeasibilityTable, SynthesisError> {
    let transitions: Vec<Transition> = sq.system().transitions().iter().copied().collect();
    let n = model.n_components();
    let columns: Vec<Vec<Vec<usize>>> = opts.run(|| {
        (0..n)
            .into_par_iter()
            .map(|i| {
                transitions
                    .iter()
                    .map(|t| Ok(local_step(model, q, sq, *t, i)?.candidates(model, q, i, opts.slack)))
                    .collect::<Result<Vec<_>, SynthesisError>>()
            })
            .collect::<Result<Vec<_>, SynthesisError>>()
    })??;
    let candidates = (0..transitions.len()).map(|t| columns.iter().map(|c| c[t].clone()).collect()).collect();
    Ok(FeasibilityTable { transitions, candidates, slack: opts.slack })
}

fn controlled(sq: &TransitionSpec, keep: &BTreeSet<Transition>, mode: Mode) -> ControlledSpec {
    let system = sq.system().filter_transitions(|t| keep.contains(t));
    let trim = system.trim();
    ControlledSpec { mode, system, trim }
}

/// Feasibility table plus the controlled spec in the requested mode. Both
/// the per-component conjunction and the factored joint test are evaluated
/// and must agree.
pub fn build_controlled_spec(
    model: &NetworkModel,
    q: &Quantizer,
    sq: &TransitionSpec,
    mode: Mode,
    opts: &SynthesisOptions,
) -> Result<(ControlledSpec, FeasibilityTable), SynthesisError> {
    let table = feasibility_table(model, q, sq, opts)?;
    let dec: BTreeSet<Transition> = table.retained().into_iter().collect();
    let cen: BTreeSet<Transition> =
        (0..table.len()).filter(|t| !table.joint(*t).is_empty()).map(|t| table.transitions[t]).collect();
    assert_eq!(dec, cen, "decentralized and centralized retained sets differ");
    Ok((controlled(sq, &dec, mode), table))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alg1Result {
    pub spec: ControlledSpec,
    pub table: FeasibilityTable,
    pub counters: Counters,
}

/// Decentralized design: per transition and component, compute the
/// candidate set, conjoin the indicators, keep and trim.
pub fn algorithm1(
    model: &NetworkModel,
    q: &Quantizer,
    sq: &TransitionSpec,
    opts: &SynthesisOptions,
) -> Result<Alg1Result, SynthesisError> {
    let (spec, table) = build_controlled_spec(model, q, sq, Mode::Dec, opts)?;
    let counters = Counters::nominal(model, table.len());
    Ok(Alg1Result { spec, table, counters })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alg2Result {
    pub spec: ControlledSpec,
    pub table: FeasibilityTable,
    /// Joint feasible set per spec-system transition.
    pub joint: Vec<FactoredSet>,
    pub counters: Counters,
}

/// Centralized design. Joint input sets are kept factored. With
/// `literal_cap = Some(c)`, every joint tuple is also enumerated (at most
/// `c` per transition) and checked against the factored set.
pub fn algorithm2(
    model: &NetworkModel,
    q: &Quantizer,
    sq: &TransitionSpec,
    opts: &SynthesisOptions,
    literal_cap: Option<u128>,
) -> Result<Alg2Result, SynthesisError> {
    let (spec, table) = build_controlled_spec(model, q, sq, Mode::Cen, opts)?;
    let joint: Vec<FactoredSet> = (0..table.len()).map(|t| table.joint(t)).collect();
    let mut counters = Counters::nominal(model, table.len());
    if let Some(cap) = literal_cap {
        let sizes: Vec<usize> = (0..model.n_components()).map(|i| model.inputs(i).len()).collect();
        let total: u128 = sizes.iter().map(|s| *s as u128).product();
        if total > cap {
            return Err(SynthesisError::CapExceeded { count: total.to_string(), cap });
        }
        let mut evaluated = 0u64;
        for (t, tr) in table.transitions.iter().enumerate() {
            let steps = (0..model.n_components())
                .map(|i| local_step(model, q, sq, *tr, i))
                .collect::<Result<Vec<_>, _>>()?;
            let mut literal = Vec::new();
            for k in 0..total {
                let u = decode_joint(k, &sizes);
                evaluated += 1;
                let ok = steps.iter().enumerate().all(|(i, s)| {
                    let mut buf = vec![0.0; model.dim(i)];
                    let cells = s.reached(model, q, i, u[i], &mut buf);
                    cells.iter().zip(&s.target).all(|(a, b)| (a - b).abs() <= opts.slack as i64)
                });
                if ok {
                    literal.push(u);
                }
            }
            if literal != joint[t].tuples() {
                return Err(SynthesisError::FactoredMismatch(t));
            }
        }
        counters.literal_evaluations = Some(evaluated);
    }
    Ok(Alg2Result { spec, table, joint, counters })
}
