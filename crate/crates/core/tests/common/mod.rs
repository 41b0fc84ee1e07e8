//! Random instance generators and brute-force oracles shared by the
//! property and acceptance targets.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use netsynth::abstraction::{decode_joint, enumerate_abstraction, GridPoint, Quantizer};
use netsynth::automata::{OutputLabel, Recognizer, SymbolTable, Transition, TransitionSystem};
use netsynth::plant::{Block, Dynamics, InputSet, NetworkModel};
use netsynth::specification::{to_transition_spec, SpecAutomaton, TransitionSpec};
use netsynth::Dec;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random system with tagged outputs drawn from a small pool so that
/// different runs can share output words.
pub fn random_system(rng: &mut impl Rng, max_states: usize, n_inputs: usize) -> TransitionSystem {
    let n = rng.gen_range(1..=max_states);
    let density = rng.gen_range(0.05..0.5);
    let mut transitions = Vec::new();
    for s in 0..n {
        for a in 0..n_inputs {
            for d in 0..n {
                if rng.gen_bool(density / n as f64 * 2.0_f64.min(n as f64)) {
                    transitions.push(Transition::new(s, a, d));
                }
            }
        }
    }
    let initial: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
    let marked: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
    let outputs: BTreeMap<usize, OutputLabel> =
        (0..n).map(|s| (s, OutputLabel::Tag(format!("o{}", rng.gen_range(0..3))))).collect();
    TransitionSystem::new(0..n, initial, marked, 0..n_inputs, transitions, outputs).unwrap()
}

/// Possibly nondeterministic recognizer over `symbols`.
pub fn random_recognizer(rng: &mut impl Rng, symbols: &SymbolTable, max_states: usize) -> Recognizer {
    let n = rng.gen_range(1..=max_states);
    let mut transitions = Vec::new();
    for s in 0..n {
        for a in 0..symbols.len() {
            for d in 0..n {
                if rng.gen_bool(0.35 / n as f64 * 2.0) {
                    transitions.push(Transition::new(s, a, d));
                }
            }
        }
    }
    let marked: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.4)).collect();
    let outputs = (0..n).map(|s| (s, OutputLabel::Tag(format!("s{s}")))).collect();
    let system = TransitionSystem::new(0..n, [0], marked, symbols.ids(), transitions, outputs).unwrap();
    Recognizer { system, symbols: symbols.clone() }
}

/// All words over `k` symbols of length at most `max_len`.
pub fn all_words(k: usize, max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for a in 0..k {
                let mut v: Vec<usize> = w.clone();
                v.push(a);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

fn dec2(v: i64) -> Dec {
    Dec::new(v, 2)
}

/// Network of `n` scalar components `x_i+ = a_i x_i + c_i x_{i+1} + u_i`
/// with `|a_i| + |c_i| < 1`, inputs a subset of `{-0.2, ..., 0.2}`
/// containing `0`.
pub fn random_linear_model(rng: &mut impl Rng, n: usize, max_inputs: usize) -> NetworkModel {
    let mut blocks = Vec::new();
    for i in 0..n {
        blocks.push(Block { row: i, col: i, matrix: vec![vec![rng.gen_range(-60..=60) as f64 / 100.0]] });
        if n > 1 && rng.gen_bool(0.8) {
            let c = rng.gen_range(-15..=15) as f64 / 100.0;
            if c != 0.0 {
                blocks.push(Block { row: i, col: (i + 1) % n, matrix: vec![vec![c]] });
            }
        }
    }
    let pool: Vec<i64> = vec![-20, -10, 10, 20];
    let sets = (0..n)
        .map(|_| {
            let k = rng.gen_range(1..=max_inputs.min(5));
            let mut chosen: Vec<i64> = pool.choose_multiple(rng, k - 1).copied().collect();
            chosen.push(0);
            InputSet::new(chosen.into_iter().map(|v| vec![dec2(v)]))
        })
        .collect();
    NetworkModel::new(
        vec![1; n],
        sets,
        Dynamics::LinearCoupled {
            blocks,
            input_gain: vec![vec![vec![1.0]]; n],
            offset: vec![vec![0.0]; n],
        },
    )
    .unwrap()
}

/// Deterministic, trimmed spec over random set-points with coordinates in
/// `{-0.2, ..., 0.2}`.
pub fn random_spec(rng: &mut impl Rng, n: usize, max_states: usize) -> SpecAutomaton {
    loop {
        let k = rng.gen_range(1..=3);
        let points: BTreeSet<Vec<Dec>> =
            (0..k).map(|_| (0..n).map(|_| dec2(10 * rng.gen_range(-2..=2))).collect()).collect();
        let symbols = SymbolTable::from_points(points);
        let m = rng.gen_range(1..=max_states);
        let mut transitions = Vec::new();
        for s in 0..m {
            for a in symbols.ids() {
                if rng.gen_bool(0.6) {
                    transitions.push(Transition::new(s, a, rng.gen_range(0..m)));
                }
            }
        }
        let marked: Vec<usize> = (0..m).filter(|_| rng.gen_bool(0.5)).collect();
        let outputs = (0..m).map(|s| (s, OutputLabel::Tag(format!("s{s}")))).collect();
        let system = TransitionSystem::new(0..m, [0], marked, symbols.ids(), transitions, outputs).unwrap().trim();
        if system.is_empty() {
            continue;
        }
        if let Ok(spec) = SpecAutomaton::new(Recognizer { system, symbols }) {
            return spec;
        }
    }
}

pub struct Instance {
    pub model: NetworkModel,
    pub q: Quantizer,
    pub spec: SpecAutomaton,
    pub sq: TransitionSpec,
}

pub fn random_instance(rng: &mut impl Rng, max_n: usize, max_inputs: usize, max_spec_states: usize) -> Instance {
    let n = rng.gen_range(1..=max_n);
    let model = random_linear_model(rng, n, max_inputs);
    let q = Quantizer::uniform(Dec::new(1, 1), n).unwrap();
    let spec = random_spec(rng, n, max_spec_states);
    let sq = to_transition_spec(&spec);
    Instance { model, q, spec, sq }
}

fn grid_points(inst: &Instance, state: usize) -> Vec<GridPoint> {
    let dims = inst.model.dims();
    (0..inst.model.n_components())
        .map(|i| inst.q.quantize_exact(i, &inst.sq.projection(state, dims, i).unwrap()))
        .collect()
}

/// Spec-system transitions for which some joint input, applied through the
/// full network step from the grid center of the source set-point, lands in
/// the cell of the target set-point in every component.
pub fn joint_oracle(inst: &Instance) -> BTreeSet<Transition> {
    let m = &inst.model;
    let sizes: Vec<usize> = (0..m.n_components()).map(|i| m.inputs(i).len()).collect();
    let total: u128 = sizes.iter().map(|s| *s as u128).product();
    let mut keep = BTreeSet::new();
    for t in inst.sq.system().transitions() {
        let src = grid_points(inst, t.src);
        let dst = grid_points(inst, t.dst);
        let x: Vec<f64> = src.iter().flat_map(|g| inst.q.dequantize_f64(g)).collect();
        let ok = (0..total).any(|k| {
            let idx = decode_joint(k, &sizes);
            let next = m.step_by_index(&x, &idx);
            (0..m.n_components()).all(|i| inst.q.quantize(i, m.component_slice(&next, i)) == dst[i])
        });
        if ok {
            keep.insert(*t);
        }
    }
    keep
}

/// Local inputs of component `i` found by scanning the explicit abstraction
/// over the box `bounds`: joint inputs whose successor matches the target
/// cell in component `i`, projected to their `i`-th entry.
pub fn brute_indicator(
    inst: &Instance,
    bounds: &[(Dec, Dec)],
    t: &Transition,
    i: usize,
) -> Option<BTreeSet<Vec<Dec>>> {
    let (ts, points) = enumerate_abstraction(&inst.model, &inst.q, bounds, 10_000).ok()?;
    let src = grid_points(inst, t.src);
    let dst = grid_points(inst, t.dst);
    let s = points.iter().position(|p| *p == src)?;
    let sizes: Vec<usize> = (0..inst.model.n_components()).map(|j| inst.model.inputs(j).len()).collect();
    Some(
        ts.successors(s)
            .filter(|tr| points[tr.dst][i] == dst[i])
            .map(|tr| inst.model.inputs(i).point(decode_joint(tr.input as u128, &sizes)[i]).to_vec())
            .collect(),
    )
}
