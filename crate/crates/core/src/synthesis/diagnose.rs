//! Why a spec step has no admissible input.

use serde::{Deserialize, Serialize};

use super::feasibility::{local_step, FeasibilityTable};
use super::SynthesisError;
use crate::abstraction::Quantizer;
use crate::automata::Transition;
use crate::decimal::Dec;
use crate::plant::NetworkModel;
use crate::specification::TransitionSpec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiagnosticEntry {
    pub transition: Transition,
    pub component: usize,
    pub source: Vec<Dec>,
    pub target: Vec<Dec>,
    pub target_cell: Vec<i64>,
    /// Distinct cells reachable over all inputs, ascending.
    pub achievable: Vec<Vec<i64>>,
    /// Sup-norm cell distance from the closest achievable cell to the target.
    pub min_distance: i64,
    pub nearest_input: Vec<Dec>,
    /// Target lies between achievable cells in every coordinate, so a finer
    /// input grid may reach it.
    pub within_hull: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnosis {
    pub entries: Vec<DiagnosticEntry>,
    pub summary: Vec<String>,
}

impl Diagnosis {
    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// One entry per infeasible `(transition, component)` pair.
pub fn diagnose(
    table: &FeasibilityTable,
    model: &NetworkModel,
    q: &Quantizer,
    sq: &TransitionSpec,
) -> Result<Diagnosis, SynthesisError> {
    let mut entries = Vec::new();
    for (t, tr) in table.transitions.iter().enumerate() {
        for i in 0..model.n_components() {
            if table.indicator(t, i) {
                continue;
            }
            let step = local_step(model, q, sq, *tr, i)?;
            let mut buf = vec![0.0; model.dim(i)];
            let reached: Vec<Vec<i64>> =
                (0..model.inputs(i).len()).map(|k| step.reached(model, q, i, k, &mut buf)).collect();
            let dist = |c: &[i64]| c.iter().zip(&step.target).map(|(a, b)| (a - b).abs()).max().unwrap_or(0);
            let (best, min_distance) =
                reached.iter().enumerate().map(|(k, c)| (k, dist(c))).min_by_key(|(_, d)| *d).expect("nonempty input set");
            let within_hull = (0..model.dim(i)).all(|c| {
                let lo = reached.iter().map(|r| r[c]).min().expect("nonempty");
                let hi = reached.iter().map(|r| r[c]).max().expect("nonempty");
                lo <= step.target[c] && step.target[c] <= hi
            });
            let mut achievable = reached.clone();
            achievable.sort();
            achievable.dedup();
            entries.push(DiagnosticEntry {
                transition: *tr,
                component: i,
                source: sq.projection(tr.src, model.dims(), i)?,
                target: sq.projection(tr.dst, model.dims(), i)?,
                target_cell: step.target,
                achievable,
                min_distance,
                nearest_input: model.inputs(i).point(best).to_vec(),
                within_hull,
            });
        }
    }
    let mut summary = Vec::new();
    if !entries.is_empty() {
        let inside = entries.iter().filter(|e| e.within_hull).count();
        let outside = entries.len() - inside;
        summary.push(format!("{} infeasible (step, component) pairs", entries.len()));
        if inside > 0 {
            summary.push(format!(
                "{inside} targets lie between achievable cells: successive inputs skip over the target cell, a finer input grid or a coarser eta may close the gap"
            ));
        }
        if outside > 0 {
            summary.push(format!(
                "{outside} targets lie outside the achievable range: no input refinement helps, the set-points or the input bounds must change"
            ));
        }
    }
    Ok(Diagnosis { entries, summary })
}
