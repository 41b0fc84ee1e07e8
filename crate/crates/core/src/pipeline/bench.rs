//! Counter and wall-time scaling of the decentralized design over ring size.

use std::fmt::Write as _;
use std::time::Instant;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};

use super::{fmt_real, PipelineError, Project};
use crate::abstraction::Quantizer;
use crate::plant::DynamicsConfig;
use crate::synthesis::{algorithm1, SynthesisOptions};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub n: usize,
    pub transitions: usize,
    pub inputs_per_component: usize,
    pub eta: crate::Dec,
    pub dec_evaluations: u64,
    /// Decimal string; the count overflows machine integers quickly.
    pub cen_evaluations: String,
    pub dec_per_component: u64,
    pub retained: usize,
    pub workers: usize,
    pub single_ms: f64,
    pub parallel_ms: f64,
    /// Outputs with one worker and with `workers` workers are equal.
    pub identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Dec counter per component is the same for every `n`.
    pub dec_linear: bool,
    pub all_identical: bool,
}

impl BenchReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>4} {:>5} {:>5} {:>8} {:>10} {:>40} {:>7} {:>10} {:>10} {:>9}",
            "N", "N_Q", "|U_i|", "eta", "dec", "cen", "workers", "1w ms", "Nw ms", "identical"
        );
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{:>4} {:>5} {:>5} {:>8} {:>10} {:>40} {:>7} {:>10} {:>10} {:>9}",
                r.n,
                r.transitions,
                r.inputs_per_component,
                r.eta.to_string(),
                r.dec_evaluations,
                r.cen_evaluations,
                r.workers,
                fmt_real((r.single_ms * 1000.0).round() / 1000.0),
                fmt_real((r.parallel_ms * 1000.0).round() / 1000.0),
                r.identical
            );
        }
        let _ = writeln!(s, "dec counter linear in N: {}", self.dec_linear);
        let _ = writeln!(s, "outputs identical across worker counts: {}", self.all_identical);
        s
    }
}

/// Rebuild the project's thermal ring for each size in `n_list` with the
/// configured input grid (no refinement) and time the decentralized pass
/// with one worker and with `workers` workers (`0`: one per component).
pub fn bench(project: &Project, n_list: &[usize], workers: usize) -> Result<BenchReport, PipelineError> {
    if !matches!(project.plant.dynamics, DynamicsConfig::ThermalRing(_)) {
        return Err(PipelineError::Config("bench needs a thermal_ring plant".into()));
    }
    let mut rows = Vec::with_capacity(n_list.len());
    for &n in n_list {
        let mut plant = project.plant.clone();
        plant.components = n;
        plant.edges = None;
        plant.dims = None;
        let p = Project::with_plant(project.config.clone(), plant)?;
        let plan = p.plan()?;
        let q = Quantizer::uniform(plan.eta, n)?;
        let w = if workers == 0 { n } else { workers };
        let single = SynthesisOptions { workers: 1, slack: p.config.slack };
        let parallel = SynthesisOptions { workers: w, slack: p.config.slack };
        let t0 = Instant::now();
        let r1 = algorithm1(&p.model, &q, &p.sq, &single)?;
        let single_ms = t0.elapsed().as_secs_f64() * 1e3;
        let t1 = Instant::now();
        let rw = algorithm1(&p.model, &q, &p.sq, &parallel)?;
        let parallel_ms = t1.elapsed().as_secs_f64() * 1e3;
        let inputs = p.model.inputs(0).len();
        rows.push(BenchRow {
            n,
            transitions: r1.counters.transitions,
            inputs_per_component: inputs,
            eta: plan.eta,
            dec_evaluations: r1.counters.dec_evaluations,
            cen_evaluations: r1.counters.cen_evaluations.to_string(),
            dec_per_component: r1.counters.dec_evaluations / n as u64,
            retained: r1.table.retained().len(),
            workers: w,
            single_ms,
            parallel_ms,
            identical: r1 == rw,
        });
        debug_assert_eq!(r1.counters.cen_evaluations, BigUint::from(r1.counters.transitions) * BigUint::from(inputs).pow(n as u32));
    }
    let dec_linear = rows.windows(2).all(|w| {
        w[0].dec_per_component == w[1].dec_per_component && w[0].transitions == w[1].transitions
    }) && rows.iter().all(|r| r.dec_evaluations == r.dec_per_component * r.n as u64);
    let all_identical = rows.iter().all(|r| r.identical);
    Ok(BenchReport { rows, dec_linear, all_identical })
}
