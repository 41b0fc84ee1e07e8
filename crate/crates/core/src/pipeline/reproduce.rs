//! Comparison of the heating design with the published controller table and
//! closed-loop trace. Exact agreement is not expected; the report lists
//! where and by how much the published data disagree with each other and
//! with this implementation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::{design, fmt_real, write_json, write_text, create_dir, PipelineError, Project};
use crate::abstraction::Quantizer;
use crate::decimal::Dec;
use crate::heating::{REFERENCE_CONTROLLERS, REFERENCE_TRACE};
use crate::plant::{validate_plan, Constraint, DynamicsConfig, PlanError, PlanMode};
use crate::synthesis::{algorithm1, extract_dec_controllers, select_word, DecControllerSet, SynthesisOptions};

/// Published accuracy, abstraction accuracy and grid step.
const PRINTED_THETA: &str = "0.5";
const PRINTED_MU: &str = "0.5";
const PRINTED_ETA: &str = "0.0225";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Discrepancy {
    pub id: String,
    pub summary: String,
    pub details: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControllerRowComparison {
    pub position: usize,
    pub label: usize,
    /// Room 1, rooms 2 and N, rooms 3..N-1.
    pub printed: Vec<Dec>,
    /// Whether each printed value lies in the synthesized set of the step
    /// named by the row label, and of the step equal to the row position.
    pub in_set_by_label: Vec<bool>,
    pub in_set_by_position: Vec<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRowComparison {
    pub t: usize,
    pub printed: Vec<f64>,
    /// Open-loop replay of the printed inputs from the printed initial
    /// state, rows taken by label and by position.
    pub replay_by_label: Vec<f64>,
    pub replay_by_position: Vec<f64>,
    /// One step from the printed state at `t - 1` with the input of step
    /// `t - 1` (by label).
    pub one_step: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproductionReport {
    pub components: usize,
    pub discrepancies: Vec<Discrepancy>,
    pub controller_rows: Vec<ControllerRowComparison>,
    pub trace_rows: Vec<TraceRowComparison>,
}

impl ReproductionReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "heating reproduction report, N = {}", self.components);
        for d in &self.discrepancies {
            let _ = writeln!(s, "\n[{}] {}", d.id, d.summary);
            for line in &d.details {
                let _ = writeln!(s, "  - {line}");
            }
        }
        let _ = writeln!(s, "\ncontroller rows (printed value in synthesized set: by label / by position)");
        for r in &self.controller_rows {
            let cells: Vec<String> = r
                .printed
                .iter()
                .zip(r.in_set_by_label.iter().zip(&r.in_set_by_position))
                .map(|(v, (a, b))| format!("{v:>6} {}/{}", yn(*a), yn(*b)))
                .collect();
            let _ = writeln!(s, "  row {:>2} label {:>2}: {}", r.position, r.label, cells.join("  "));
        }
        let _ = writeln!(s, "\ntrace rows (room 1, rooms 2/N, rooms 3..N-1)");
        for r in &self.trace_rows {
            let _ = writeln!(
                s,
                "  t {:>2}: printed {}  replay(label) {}  replay(position) {}  one-step {}",
                r.t,
                triple(&r.printed),
                triple(&r.replay_by_label),
                triple(&r.replay_by_position),
                triple(&r.one_step)
            );
        }
        s
    }
}

fn yn(b: bool) -> &'static str {
    if b {
        "y"
    } else {
        "n"
    }
}

fn triple(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.4}")).collect::<Vec<_>>().join(" ")
}

fn d(s: &str) -> Dec {
    s.parse().expect("literal")
}

/// Component group of component `i` in a ring of `n`: 0 for room 1, 1 for
/// its two neighbors, 2 for the rest.
fn group(i: usize, n: usize) -> usize {
    match i {
        0 => 0,
        1 => 1,
        _ if i == n - 1 => 1,
        _ => 2,
    }
}

fn printed_row(position: usize) -> (usize, [Dec; 3]) {
    let (label, a, b, c) = REFERENCE_CONTROLLERS[position];
    (label, [d(a), d(b), d(c)])
}

fn joint_input(row: &[Dec; 3], n: usize) -> Vec<Vec<Dec>> {
    (0..n).map(|i| vec![row[group(i, n)]]).collect()
}

fn representatives(x: &[f64]) -> Vec<f64> {
    vec![x[0], x[1], x[2]]
}

fn printed_state(t: usize, n: usize) -> Vec<f64> {
    let (_, a, b, c) = REFERENCE_TRACE[t];
    (0..n).map(|i| [a, b, c][group(i, n)]).collect()
}

fn in_set(ctrl: Option<&DecControllerSet>, step: usize, n: usize, value: Dec, g: usize) -> bool {
    let Some(ctrl) = ctrl else { return false };
    let Some(per) = ctrl.inputs.get(step) else { return false };
    (0..n).filter(|i| group(*i, n) == g).all(|i| per[i].iter().any(|p| p[0] == value))
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Build the comparison for a thermal-ring project with at least 4 rooms
/// and write `reproduction.json` and `reproduction.txt`.
pub fn reproduce(project: &Project, workers: usize) -> Result<ReproductionReport, PipelineError> {
    if !matches!(project.plant.dynamics, DynamicsConfig::ThermalRing(_)) {
        return Err(PipelineError::Config("the reproduction report needs a thermal_ring plant".into()));
    }
    let model = &project.model;
    let n = model.n_components();
    if n < 4 {
        return Err(PipelineError::Config("the reproduction report needs at least 4 rooms".into()));
    }
    let y_q = project.spec.alphabet();
    let (theta, mu, eta) = (d(PRINTED_THETA), d(PRINTED_MU), d(PRINTED_ETA));
    let mut discrepancies = Vec::new();

    // Grid step versus set-points.
    let mut details = Vec::new();
    for mode in [PlanMode::GridAligned, PlanMode::Budget] {
        match validate_plan(&project.cert, theta, &y_q, mode, mu, eta) {
            Ok(p) => details.push(format!("{mode}: accepted, quantization bound {}", fmt_real(p.bound))),
            Err(PlanError::Infeasible { constraint, alternatives }) => {
                let alts: Vec<String> = alternatives.iter().map(Dec::to_string).collect();
                let mut line = format!("{mode}: {constraint}");
                if let Constraint::GridContainment { offending, .. } = &constraint {
                    line = format!("{mode}: {} set-point coordinates off the eta grid: {constraint}", offending.len());
                }
                if !alts.is_empty() {
                    line.push_str(&format!("; compliant eta: {}", alts.join(", ")));
                }
                details.push(line);
            }
            Err(e) => return Err(e.into()),
        }
    }
    let q_printed = Quantizer::uniform(eta, n)?;
    let printed = algorithm1(model, &q_printed, &project.sq, &SynthesisOptions { workers, slack: 0 })?;
    details.push(format!(
        "with eta = {eta} and the configured inputs ({} per room): {} of {} spec steps feasible, trimmed system has {} states",
        model.inputs(0).len(),
        printed.table.retained().len(),
        printed.table.len(),
        printed.spec.trim.states().len()
    ));
    discrepancies.push(Discrepancy {
        id: "eta_divisibility".into(),
        summary: format!("published eta = {eta} does not divide the set-points, and mu + eta/2 exceeds theta"),
        details,
    });

    // Controller table row order and content.
    let ours = design(project, workers)?;
    let ctrl = if ours.result.spec.trim.is_empty() {
        None
    } else {
        let word = select_word(&ours.result.spec.trim, &project.sq, project.config.word_policy)?;
        Some(extract_dec_controllers(
            &ours.model,
            &ours.quantizer,
            &project.cert,
            ours.check.plan.mu.to_f64(),
            &project.sq,
            &word,
            &ours.result.table,
        )?)
    };
    let mut controller_rows = Vec::new();
    for position in 0..REFERENCE_CONTROLLERS.len() {
        let (label, row) = printed_row(position);
        controller_rows.push(ControllerRowComparison {
            position,
            label,
            printed: row.to_vec(),
            in_set_by_label: (0..3).map(|g| in_set(ctrl.as_ref(), label, n, row[g], g)).collect(),
            in_set_by_position: (0..3).map(|g| in_set(ctrl.as_ref(), position, n, row[g], g)).collect(),
        });
    }
    let labels: Vec<String> = REFERENCE_CONTROLLERS.iter().map(|r| r.0.to_string()).collect();
    let moved: Vec<String> = controller_rows
        .iter()
        .filter(|r| r.label != r.position)
        .map(|r| format!("row {} carries label {}", r.position, r.label))
        .collect();
    let count = |f: fn(&ControllerRowComparison) -> &Vec<bool>| controller_rows.iter().flat_map(f).filter(|b| **b).count();
    let total = controller_rows.len() * 3;
    let mut details = vec![
        format!("printed step labels in row order: {}", labels.join(" ")),
        format!("out of place: {}", moved.join(", ")),
        format!(
            "printed inputs inside this design's sets (plan {}, mu = {}, eta = {}, input step {}): {} of {total} by label, {} of {total} by position",
            ours.check.plan.mode,
            ours.check.plan.mu,
            ours.check.plan.eta,
            ours.input_grid.as_ref().map_or("-".to_string(), |g| g.step.to_string()),
            count(|r| &r.in_set_by_label),
            count(|r| &r.in_set_by_position)
        ),
    ];
    if ctrl.is_none() {
        details.push("this design is unenforceable, so no set contains a printed input".into());
    }
    discrepancies.push(Discrepancy {
        id: "controller_table_row_order".into(),
        summary: "published controller rows are not in step order and their inputs differ from the synthesized sets".into(),
        details,
    });

    // Replay of the printed inputs against the printed trace.
    let steps = REFERENCE_TRACE.len();
    let mut by_label = printed_state(0, n);
    let mut by_position = by_label.clone();
    let label_row = |t: usize| {
        let pos = REFERENCE_CONTROLLERS.iter().position(|r| r.0 == t).expect("every label printed");
        printed_row(pos).1
    };
    let mut trace_rows = vec![TraceRowComparison {
        t: 0,
        printed: representatives(&printed_state(0, n)),
        replay_by_label: representatives(&by_label),
        replay_by_position: representatives(&by_position),
        one_step: representatives(&printed_state(0, n)),
    }];
    let (mut dev_label, mut dev_position, mut dev_one) = (0.0f64, 0.0f64, 0.0f64);
    for t in 1..steps {
        by_label = model.step(&by_label, &joint_input(&label_row(t - 1), n))?;
        by_position = model.step(&by_position, &joint_input(&printed_row(t - 1).1, n))?;
        let one = model.step(&printed_state(t - 1, n), &joint_input(&label_row(t - 1), n))?;
        let printed = printed_state(t, n);
        dev_label = dev_label.max(max_abs_diff(&by_label, &printed));
        dev_position = dev_position.max(max_abs_diff(&by_position, &printed));
        dev_one = dev_one.max(max_abs_diff(&one, &printed));
        trace_rows.push(TraceRowComparison {
            t,
            printed: representatives(&printed),
            replay_by_label: representatives(&by_label),
            replay_by_position: representatives(&by_position),
            one_step: representatives(&one),
        });
    }
    let first = &trace_rows[1];
    discrepancies.push(Discrepancy {
        id: "trace_replay".into(),
        summary: "replaying the published inputs does not reproduce the published trace".into(),
        details: vec![
            format!(
                "room 1 at t = 1: replay gives {:.4} (label order) and {:.4} (row order), printed {:.4}",
                first.replay_by_label[0], first.replay_by_position[0], first.printed[0]
            ),
            format!("largest gap to the printed states over {} steps: {:.4} (label order), {:.4} (row order)", steps - 1, dev_label, dev_position),
            format!("largest one-step residual from printed state and input: {dev_one:.4}"),
        ],
    });

    let report = ReproductionReport { components: n, discrepancies, controller_rows, trace_rows };
    let out = project.config.output_path();
    create_dir(&out)?;
    write_json(&out, "reproduction.json", &report)?;
    write_text(&out, "reproduction.txt", &report.render())?;
    Ok(report)
}
