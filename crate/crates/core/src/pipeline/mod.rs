//! Project-level commands: `check`, `synthesize`, `simulate`, `bench` and the
//! comparison with published reference data. Every command reads a
//! [`ProjectConfig`], writes JSON artifacts plus a text rendering into the
//! output directory, and returns a report.

mod bench;
mod reproduce;

pub use bench::{bench, BenchReport, BenchRow};
pub use reproduce::{reproduce, ControllerRowComparison, Discrepancy, ReproductionReport, TraceRowComparison};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::{AbstractionError, Quantizer};
use crate::decimal::Dec;
use crate::plant::{
    accuracy_plan, falsify_certificate, thermal_contraction, validate_plan, AccuracyPlan, DynamicsConfig,
    FalsificationReport, GasCertificate, InputGrid, NetworkModel, PlanError, PlanMode, PlantConfig, PlantError,
};
use crate::runtime::{
    monte_carlo_dec, run_cen, run_dec, verify_enforcement, write_trace_csv, MonteCarloSummary, Pick, RuntimeError, Verdict,
};
use crate::specification::{to_transition_spec, SpecAutomaton, SpecError, SpecFile, TransitionSpec};
use crate::synthesis::{
    algorithm1, algorithm2, check_propq_and_static, diagnose, extract_cen_controller, extract_dec_controllers,
    refine_inputs, select_word, Alg1Result, CenController, Counters, DecControllerSet, Diagnosis, PropqWitness,
    RefineAttempt, RefineTarget, Region, RegionSet, SynthesisError, SynthesisOptions, WordPolicy,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_OTHER: i32 = 1;
pub const EXIT_UNENFORCEABLE: i32 = 2;
pub const EXIT_FALSIFIED: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error("certificate falsified: {0}")]
    Falsified(Box<FalsificationReport>),
    #[error("specification unenforceable: {} infeasible (step, component) pairs, diagnostics in {}", .diagnosis.entries.len(), .path.display())]
    Unenforceable { diagnosis: Box<Diagnosis>, path: PathBuf },
    #[error("missing artifact {}: run `synthesize` first", .0.display())]
    MissingArtifact(PathBuf),
    #[error("{}: {msg}", .path.display())]
    Io { path: PathBuf, msg: String },
    #[error("decentralized and centralized trims differ")]
    TrimMismatch,
    #[error(transparent)]
    Synthesis(#[from] SynthesisError),
    #[error(transparent)]
    Runtime(#[from] RuntimeError),
}

impl PipelineError {
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Plan(_) => EXIT_CONFIG,
            PipelineError::Falsified(_) => EXIT_FALSIFIED,
            PipelineError::Unenforceable { .. } | PipelineError::Synthesis(SynthesisError::Unenforceable) => {
                EXIT_UNENFORCEABLE
            }
            _ => EXIT_OTHER,
        }
    }
}

impl From<PlantError> for PipelineError {
    fn from(e: PlantError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl From<SpecError> for PipelineError {
    fn from(e: SpecError) -> Self {
        PipelineError::Config(e.to_string())
    }
}

impl From<AbstractionError> for PipelineError {
    fn from(e: AbstractionError) -> Self {
        PipelineError::Synthesis(e.into())
    }
}

impl From<crate::decimal::DecError> for PipelineError {
    fn from(e: crate::decimal::DecError) -> Self {
        PipelineError::Synthesis(e.into())
    }
}

/// Which controllers to design.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignMode {
    Dec,
    Cen,
    #[default]
    Both,
}

impl DesignMode {
    pub fn dec(self) -> bool {
        matches!(self, DesignMode::Dec | DesignMode::Both)
    }

    pub fn cen(self) -> bool {
        matches!(self, DesignMode::Cen | DesignMode::Both)
    }
}

impl FromStr for DesignMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "dec" => Ok(DesignMode::Dec),
            "cen" => Ok(DesignMode::Cen),
            "both" => Ok(DesignMode::Both),
            _ => Err(format!("unknown mode `{s}` (expected dec, cen or both)")),
        }
    }
}

/// Named initial state inside the initial region.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    /// Region center.
    #[default]
    Center,
    /// Upper bounds for component 0 and its neighbors, lower bounds
    /// elsewhere.
    Corner,
}

impl FromStr for Preset {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "center" => Ok(Preset::Center),
            "corner" => Ok(Preset::Corner),
            _ => Err(format!("unknown preset `{s}` (expected center or corner)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FalsifierConfig {
    pub samples: u64,
    pub seed: u64,
}

impl Default for FalsifierConfig {
    fn default() -> Self {
        FalsifierConfig { samples: 10_000, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RefineConfig {
    pub enabled: bool,
    pub target: RefineTarget,
    pub max_inputs: usize,
}

impl Default for RefineConfig {
    fn default() -> Self {
        RefineConfig { enabled: false, target: RefineTarget::Full, max_inputs: 4001 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulationConfig {
    pub preset: Preset,
    /// Explicit initial state; overrides `preset`.
    pub x0: Option<Vec<f64>>,
    pub samples: u64,
    pub seed: u64,
    pub input_pick: Pick,
    pub successor_pick: Pick,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            preset: Preset::Center,
            x0: None,
            samples: 100,
            seed: 1,
            input_pick: Pick::Min,
            successor_pick: Pick::Min,
        }
    }
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

/// ```toml
/// plant = "plant.toml"
/// spec = "spec.toml"
/// theta = "0.5"
/// plan_mode = "grid_aligned"
/// mode = "both"
/// word_policy = "shortest"
///
/// [refine]
/// enabled = true
///
/// [simulation]
/// samples = 100
/// seed = 1
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub plant: PathBuf,
    pub spec: PathBuf,
    pub theta: Dec,
    #[serde(default = "default_plan_mode")]
    pub plan_mode: PlanMode,
    #[serde(default)]
    pub mu: Option<Dec>,
    #[serde(default)]
    pub eta: Option<Dec>,
    #[serde(default)]
    pub mode: DesignMode,
    #[serde(default = "default_word_policy")]
    pub word_policy: WordPolicy,
    /// Cells of tolerance on successor matching; nonzero taints outputs.
    #[serde(default)]
    pub slack: u64,
    /// Continue past a falsified certificate; taints outputs.
    #[serde(default)]
    pub override_check: bool,
    #[serde(default)]
    pub falsifier: FalsifierConfig,
    #[serde(default)]
    pub refine: RefineConfig,
    #[serde(default)]
    pub simulation: SimulationConfig,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Directory relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_plan_mode() -> PlanMode {
    PlanMode::GridAligned
}

fn default_word_policy() -> WordPolicy {
    WordPolicy::Shortest
}

impl ProjectConfig {
    pub fn from_toml(text: &str, base_dir: &Path) -> Result<ProjectConfig, PipelineError> {
        let mut cfg: ProjectConfig = toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        if !cfg.theta.is_sign_positive_nonzero() {
            return Err(PipelineError::Config("theta must be positive".into()));
        }
        if cfg.mu.is_some() != cfg.eta.is_some() {
            return Err(PipelineError::Config("mu and eta must be given together".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ProjectConfig, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::Config(format!("{}: {e}", path.display())))?;
        ProjectConfig::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        self.base_dir.join(p)
    }

    pub fn output_path(&self) -> PathBuf {
        self.resolve(&self.output_dir)
    }
}

/// Config plus everything built from it.
#[derive(Debug, Clone)]
pub struct Project {
    pub config: ProjectConfig,
    pub plant: PlantConfig,
    pub model: NetworkModel,
    pub cert: GasCertificate,
    pub spec: SpecAutomaton,
    pub sq: TransitionSpec,
}

impl Project {
    pub fn load(path: &Path) -> Result<Project, PipelineError> {
        Project::from_config(ProjectConfig::load(path)?)
    }

    pub fn from_config(config: ProjectConfig) -> Result<Project, PipelineError> {
        let plant = PlantConfig::load(&config.resolve(&config.plant))?;
        Project::with_plant(config, plant)
    }

    /// Build with `plant` in place of the file named by the config.
    pub fn with_plant(config: ProjectConfig, plant: PlantConfig) -> Result<Project, PipelineError> {
        let (model, cert) = plant.build()?;
        let spec_path = config.resolve(&config.spec);
        let spec_file = SpecFile::load(&spec_path)?;
        let spec = spec_file.build(spec_path.parent().unwrap_or(Path::new(".")), Some(model.total_dim()))?;
        if spec.point_dim() != model.total_dim() {
            return Err(PipelineError::Config(format!(
                "spec points have {} coordinates, the network has {}",
                spec.point_dim(),
                model.total_dim()
            )));
        }
        let sq = to_transition_spec(&spec);
        Ok(Project { config, plant, model, cert, spec, sq })
    }

    fn plan(&self) -> Result<AccuracyPlan, PipelineError> {
        let c = &self.config;
        let y_q = self.spec.alphabet();
        Ok(match (c.mu, c.eta) {
            (Some(mu), Some(eta)) => validate_plan(&self.cert, c.theta, &y_q, c.plan_mode, mu, eta)?,
            _ => accuracy_plan(&self.cert, c.theta, &y_q, c.plan_mode)?,
        })
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Io { path: path.to_path_buf(), msg: e.to_string() }
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, PipelineError> {
    let path = dir.join(name);
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(&path, e))?;
    text.push('\n');
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, PipelineError> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| io_err(&path, e))?;
    Ok(path)
}

fn read_json<T: DeserializeOwned>(dir: &Path, name: &str) -> Result<T, PipelineError> {
    let path = dir.join(name);
    if !path.exists() {
        return Err(PipelineError::MissingArtifact(path));
    }
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| io_err(&path, e))
}

fn create_dir(dir: &Path) -> Result<(), PipelineError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))
}

/// Up to 10 decimals, trailing zeros dropped.
pub(crate) fn fmt_real(v: f64) -> String {
    let s = format!("{v:.10}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.into()
    }
}

fn fmt_point(p: &[Dec]) -> String {
    match p {
        [v] => v.to_string(),
        _ => format!("({})", p.iter().map(Dec::to_string).collect::<Vec<_>>().join(", ")),
    }
}

fn fmt_set(s: &[Vec<Dec>]) -> String {
    match s {
        [] => "-".into(),
        [p] => fmt_point(p),
        _ => format!("{{{}}}", s.iter().map(|p| fmt_point(p)).collect::<Vec<_>>().join(", ")),
    }
}

fn fmt_box(r: &Region) -> String {
    r.lower.iter().zip(&r.upper).map(|(l, u)| format!("[{l}, {u}]")).collect::<Vec<_>>().join(" x ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub components: usize,
    pub dims: Vec<usize>,
    pub falsification: FalsificationReport,
    /// Contraction factor when the plant is a thermal ring.
    pub contraction: Option<Dec>,
    pub plan: AccuracyPlan,
    pub explicit_parameters: bool,
    pub faithful: bool,
}

impl CheckReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "network: {} components, dims {:?}", self.components, self.dims);
        let _ = writeln!(s, "certificate: {}", self.falsification);
        if let Some(a) = self.contraction {
            let _ = writeln!(s, "contraction A = {a}");
        }
        let p = &self.plan;
        let _ = writeln!(s, "quantization bound at mu = {}: {}", p.mu, fmt_real(p.bound));
        let _ = writeln!(
            s,
            "plan ({}{}): theta = {}, mu = {}, eta = {}",
            p.mode,
            if self.explicit_parameters { ", explicit" } else { "" },
            p.theta,
            p.mu,
            p.eta
        );
        let _ = writeln!(s, "grid containment: {}", if p.grid_containment { "yes" } else { "no" });
        let _ = writeln!(s, "faithful: {}", self.faithful);
        s
    }
}

/// Falsify the certificate and fix `(mu, eta)`.
pub fn check(project: &Project) -> Result<CheckReport, PipelineError> {
    let c = &project.config;
    let model = &project.model;
    let falsification = falsify_certificate(
        model,
        &project.cert,
        &project.plant.sample_box(model.total_dim()),
        c.falsifier.samples,
        c.falsifier.seed,
    )?;
    if !falsification.passed() && !c.override_check {
        return Err(PipelineError::Falsified(Box::new(falsification)));
    }
    let contraction = match &project.plant.dynamics {
        DynamicsConfig::ThermalRing(p) => Some(thermal_contraction(p.alpha, p.beta, p.gamma)?),
        _ => None,
    };
    let plan = project.plan()?;
    Ok(CheckReport {
        components: model.n_components(),
        dims: model.dims().to_vec(),
        faithful: falsification.passed(),
        falsification,
        contraction,
        plan,
        explicit_parameters: c.mu.is_some(),
    })
}

/// Result of planning, optional input refinement and the decentralized
/// feasibility pass.
#[derive(Debug, Clone)]
pub struct Design {
    pub check: CheckReport,
    /// Network with the input sets actually used.
    pub model: NetworkModel,
    pub input_grid: Option<InputGrid>,
    pub quantizer: Quantizer,
    pub result: Alg1Result,
    pub refinement: Vec<RefineAttempt>,
    pub options: SynthesisOptions,
}

impl Design {
    pub fn faithful(&self) -> bool {
        self.check.faithful && self.options.faithful()
    }
}

pub fn design(project: &Project, workers: usize) -> Result<Design, PipelineError> {
    let check = check(project)?;
    let c = &project.config;
    let quantizer = Quantizer::uniform(check.plan.eta, project.model.n_components())?;
    let options = SynthesisOptions { workers, slack: c.slack };
    let base_grid = project.plant.input_grid().map(|(g, _)| g);
    let (model, input_grid, result, refinement) = if c.refine.enabled {
        let grid = base_grid.ok_or_else(|| PipelineError::Config("input refinement needs a grid input set".into()))?;
        let out = refine_inputs(
            &project.model,
            &grid,
            &quantizer,
            &project.sq,
            c.refine.target,
            c.refine.max_inputs,
            &options,
        )?;
        (out.model, Some(out.grid), out.result, out.attempts)
    } else {
        let result = algorithm1(&project.model, &quantizer, &project.sq, &options)?;
        (project.model.clone(), base_grid, result, Vec::new())
    };
    Ok(Design { check, model, input_grid, quantizer, result, refinement, options })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecSummary {
    pub word_policy: WordPolicy,
    pub word_length: usize,
    pub initial_region: Region,
    pub final_region: Region,
    /// Repeated set-point with different successors, which rules out a
    /// static feedback.
    pub propq_witness: Option<PropqWitness>,
    pub static_feedback: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CenSummary {
    pub states: usize,
    pub edges: usize,
    pub initial_regions: Vec<Region>,
    pub trim_identical: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthesisReport {
    pub faithful: bool,
    pub mode: DesignMode,
    pub plan: AccuracyPlan,
    pub input_grid: Option<InputGrid>,
    pub inputs_per_component: Vec<usize>,
    pub refinement: Vec<RefineAttempt>,
    pub spec_transitions: usize,
    pub retained: usize,
    pub trim_states: usize,
    pub trim_transitions: usize,
    pub enforceable: bool,
    pub counters: Counters,
    pub dec: Option<DecSummary>,
    pub cen: Option<CenSummary>,
    pub artifacts: Vec<String>,
}

impl SynthesisReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let p = &self.plan;
        let _ = writeln!(s, "plan ({}): mu = {}, eta = {}", p.mode, p.mu, p.eta);
        if let Some(g) = &self.input_grid {
            let _ = writeln!(s, "input grid: {}:{}:{} ({} values per component)", g.start, g.step, g.stop, self.inputs_per_component[0]);
        }
        for a in &self.refinement {
            let _ = writeln!(
                s,
                "  refine step {}: {} inputs, {} retained, trim {} states{}",
                a.step,
                a.inputs_per_component,
                a.retained,
                a.trim_states,
                if a.satisfied { " (accepted)" } else { "" }
            );
        }
        let _ = writeln!(
            s,
            "spec steps: {}, feasible: {}, trim: {} states / {} transitions",
            self.spec_transitions, self.retained, self.trim_states, self.trim_transitions
        );
        let _ = writeln!(s, "dec evaluations: {}", self.counters.dec_evaluations);
        let _ = writeln!(s, "cen evaluations: {}", self.counters.cen_evaluations);
        if !self.enforceable {
            let _ = writeln!(s, "unenforceable");
        }
        if let Some(d) = &self.dec {
            let _ = writeln!(s, "dec word ({}): {} symbols", d.word_policy, d.word_length);
            let _ = writeln!(s, "X0 = {}", fmt_box(&d.initial_region));
            let _ = writeln!(s, "Xf = {}", fmt_box(&d.final_region));
            match d.propq_witness {
                Some(w) => {
                    let _ = writeln!(s, "static feedback refused: steps {} and {} share a set-point", w.t, w.t_prime);
                }
                None => {
                    let _ = writeln!(s, "static feedback emitted");
                }
            }
        }
        if let Some(c) = &self.cen {
            let _ = writeln!(
                s,
                "cen controller: {} states, {} edges, {} initial regions, trims identical: {}",
                c.states,
                c.edges,
                c.initial_regions.len(),
                c.trim_identical
            );
        }
        let _ = writeln!(s, "faithful: {}", self.faithful);
        s
    }
}

/// Controller table: one row per chain step, one column per component.
pub fn controller_table(ctrl: &DecControllerSet) -> String {
    let n = ctrl.dims.len();
    let mut header = vec!["t".to_string(), "q_t".to_string()];
    header.extend((1..=n).map(|i| format!("u_{i}")));
    let mut rows = vec![header];
    for (t, per) in ctrl.inputs.iter().enumerate() {
        let mut row = vec![t.to_string(), fmt_point(&ctrl.word.word[t])];
        row.extend(per.iter().map(|s| fmt_set(s)));
        rows.push(row);
    }
    let widths: Vec<usize> =
        (0..rows[0].len()).map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0)).collect();
    let mut s = String::new();
    for r in &rows {
        let line: Vec<String> = r.iter().zip(&widths).map(|(v, w)| format!("{v:<w$}")).collect();
        let _ = writeln!(s, "{}", line.join("  ").trim_end());
    }
    s
}

fn controller_csv(ctrl: &DecControllerSet) -> String {
    let mut s = String::from("t,component,inputs\n");
    for (t, per) in ctrl.inputs.iter().enumerate() {
        for (i, set) in per.iter().enumerate() {
            let items: Vec<String> = set.iter().map(|p| p.iter().map(Dec::to_string).collect::<Vec<_>>().join(" ")).collect();
            let _ = writeln!(s, "{t},{},{}", i + 1, items.join(";"));
        }
    }
    s
}

/// Design controllers and write them with regions, counters and
/// diagnostics to the output directory.
pub fn synthesize(project: &Project, workers: usize) -> Result<SynthesisReport, PipelineError> {
    let c = &project.config;
    let d = design(project, workers)?;
    let out = c.output_path();
    create_dir(&out)?;
    let mut artifacts = Vec::new();
    let mut note = |p: PathBuf| artifacts.push(p.file_name().expect("file").to_string_lossy().into_owned());
    note(write_json(&out, "check.json", &d.check)?);
    let diagnosis = diagnose(&d.result.table, &d.model, &d.quantizer, &project.sq)?;
    let diag_path = write_json(&out, "diagnostics.json", &diagnosis)?;
    note(diag_path.clone());
    let trim = &d.result.spec.trim;
    let mut report = SynthesisReport {
        faithful: d.faithful(),
        mode: c.mode,
        plan: d.check.plan.clone(),
        input_grid: d.input_grid.clone(),
        inputs_per_component: (0..d.model.n_components()).map(|i| d.model.inputs(i).len()).collect(),
        refinement: d.refinement.clone(),
        spec_transitions: d.result.table.len(),
        retained: d.result.table.retained().len(),
        trim_states: trim.states().len(),
        trim_transitions: trim.transitions().len(),
        enforceable: !trim.is_empty(),
        counters: d.result.counters.clone(),
        dec: None,
        cen: None,
        artifacts: Vec::new(),
    };
    if trim.is_empty() {
        report.artifacts = artifacts;
        report.artifacts.push("synthesis.json".into());
        write_json(&out, "synthesis.json", &report)?;
        return Err(PipelineError::Unenforceable { diagnosis: Box::new(diagnosis), path: diag_path });
    }
    let mu = d.check.plan.mu.to_f64();
    if c.mode.dec() {
        let word = select_word(trim, &project.sq, c.word_policy)?;
        let mut ctrl = extract_dec_controllers(&d.model, &d.quantizer, &project.cert, mu, &project.sq, &word, &d.result.table)?;
        ctrl.faithful = report.faithful;
        note(write_json(&out, "dec_controllers.json", &ctrl)?);
        note(write_text(&out, "controller_table.txt", &controller_table(&ctrl))?);
        note(write_text(&out, "controller_table.csv", &controller_csv(&ctrl))?);
        let gate = check_propq_and_static(&d.model, &d.quantizer, &project.cert, mu, &ctrl)?;
        if let Ok(fb) = &gate {
            note(write_json(&out, "static_feedback.json", fb)?);
        }
        report.dec = Some(DecSummary {
            word_policy: c.word_policy,
            word_length: ctrl.word.len(),
            initial_region: ctrl.initial_region.clone(),
            final_region: ctrl.final_region.clone(),
            propq_witness: gate.as_ref().err().copied(),
            static_feedback: gate.is_ok(),
        });
    }
    if c.mode.cen() {
        let alg2 = algorithm2(&d.model, &d.quantizer, &project.sq, &d.options, None)?;
        let trim_identical = alg2.spec.trim == *trim;
        if !trim_identical {
            return Err(PipelineError::TrimMismatch);
        }
        let mut ctrl =
            extract_cen_controller(&d.model, &d.quantizer, &project.cert, mu, &project.sq, &alg2.spec, &alg2.table)?;
        ctrl.faithful = report.faithful;
        note(write_json(&out, "cen_controller.json", &ctrl)?);
        report.cen = Some(CenSummary {
            states: ctrl.states.len(),
            edges: ctrl.edges.len(),
            initial_regions: ctrl.initial_regions.boxes.clone(),
            trim_identical,
        });
    }
    note(write_json(&out, "counters.json", &report.counters)?);
    artifacts.push("synthesis.json".into());
    artifacts.push("synthesis.txt".into());
    report.artifacts = artifacts;
    write_json(&out, "synthesis.json", &report)?;
    write_text(&out, "synthesis.txt", &report.render())?;
    Ok(report)
}

/// Initial state for `preset` inside `region`.
pub fn preset_state(model: &NetworkModel, region: &Region, preset: Preset) -> Result<Vec<f64>, PipelineError> {
    Ok(match preset {
        Preset::Center => region.center_f64(),
        Preset::Corner => {
            let mut high = vec![0usize];
            high.extend_from_slice(model.neighbors(0)?);
            let mut x: Vec<f64> = region.lower.iter().map(Dec::to_f64).collect();
            for i in high {
                let o = model.offset(i);
                for k in o..o + model.dim(i) {
                    x[k] = region.upper[k].to_f64();
                }
            }
            x
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceSummary {
    pub x0: Vec<f64>,
    pub steps: usize,
    pub verdict: Verdict,
    pub warnings: Vec<String>,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub theta: Dec,
    pub dec: Option<TraceSummary>,
    pub monte_carlo: Option<MonteCarloSummary>,
    pub cen: Option<TraceSummary>,
    pub all_pass: bool,
}

impl SimulationReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        for (name, t) in [("dec", &self.dec), ("cen", &self.cen)] {
            if let Some(t) = t {
                let _ = writeln!(
                    s,
                    "{name} trace: {} steps from {:?}, enforced: {}, max deviation {:.6} -> {}",
                    t.steps, t.x0, t.verdict.enforced, t.verdict.max_deviation, t.csv
                );
                if let Some(v) = &t.verdict.first_violation {
                    let _ = writeln!(s, "  first violation: {v:?}");
                }
                for w in &t.warnings {
                    let _ = writeln!(s, "  warning: {w}");
                }
            }
        }
        if let Some(m) = &self.monte_carlo {
            let _ = writeln!(
                s,
                "monte carlo: {}/{} enforced (seed {}), max deviation {:.6}, all pass: {}",
                m.passed, m.samples, m.seed, m.max_deviation, m.all_pass
            );
        }
        let _ = writeln!(s, "all pass: {}", self.all_pass);
        s
    }
}

/// Network with the input sets recorded by `synthesize`.
fn synthesized_model(project: &Project, report: &SynthesisReport) -> Result<NetworkModel, PipelineError> {
    match (&report.input_grid, project.plant.input_grid()) {
        (Some(g), Some(_)) => {
            let sets = (0..project.model.n_components())
                .map(|i| g.input_set(project.model.input_dim(i)))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(project.model.with_input_sets(sets)?)
        }
        _ => Ok(project.model.clone()),
    }
}

/// Run the synthesized controllers from the configured initial state, then
/// a seeded Monte-Carlo batch over the initial region.
pub fn simulate(project: &Project) -> Result<SimulationReport, PipelineError> {
    let c = &project.config;
    let sim = &c.simulation;
    let out = c.output_path();
    let synth: SynthesisReport = read_json(&out, "synthesis.json")?;
    let model = synthesized_model(project, &synth)?;
    let theta = c.theta.to_f64();
    let x0_for = |region: &Region| -> Result<Vec<f64>, PipelineError> {
        match &sim.x0 {
            Some(x) => Ok(x.clone()),
            None => preset_state(&model, region, sim.preset),
        }
    };
    let mut report = SimulationReport { theta: c.theta, dec: None, monte_carlo: None, cen: None, all_pass: true };
    if c.mode.dec() {
        let ctrl: DecControllerSet = read_json(&out, "dec_controllers.json")?;
        let x0 = x0_for(&ctrl.initial_region)?;
        let trace = run_dec(&model, &ctrl, &x0, sim.input_pick)?;
        let initial = RegionSet { boxes: vec![ctrl.initial_region.clone()] };
        let final_ = RegionSet { boxes: vec![ctrl.final_region.clone()] };
        let verdict = verify_enforcement(&trace, &ctrl.word.word, theta, &initial, &final_)?;
        let path = out.join("trace_dec.csv");
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_trace_csv(&trace, file)?;
        let mc = monte_carlo_dec(&model, &ctrl, theta, sim.samples, sim.seed, sim.input_pick)?;
        report.all_pass &= verdict.enforced && mc.all_pass;
        report.dec = Some(TraceSummary {
            x0,
            steps: trace.len() - 1,
            verdict,
            warnings: trace.warnings,
            csv: "trace_dec.csv".into(),
        });
        report.monte_carlo = Some(mc);
    }
    if c.mode.cen() {
        let ctrl: CenController = read_json(&out, "cen_controller.json")?;
        let first = ctrl
            .initial_regions
            .boxes
            .first()
            .ok_or_else(|| PipelineError::Config("centralized controller has no initial region".into()))?;
        let x0 = x0_for(first)?;
        let trace = run_cen(&model, &ctrl, &x0, sim.successor_pick, sim.input_pick, None)?;
        let verdict = verify_enforcement(&trace, &trace.outputs, theta, &ctrl.initial_regions, &ctrl.final_regions)?;
        let path = out.join("trace_cen.csv");
        let file = fs::File::create(&path).map_err(|e| io_err(&path, e))?;
        write_trace_csv(&trace, file)?;
        report.all_pass &= verdict.enforced;
        report.cen = Some(TraceSummary {
            x0,
            steps: trace.len() - 1,
            verdict,
            warnings: trace.warnings,
            csv: "trace_cen.csv".into(),
        });
    }
    write_json(&out, "simulation.json", &report)?;
    write_text(&out, "simulation.txt", &report.render())?;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heating;

    fn heating_project(dir: &Path, n: usize, extra: &str) -> Project {
        fs::write(dir.join("plant.toml"), heating::plant_config_toml(n)).unwrap();
        fs::write(
            dir.join("spec.toml"),
            "[spec]\nkind = \"word_plus\"\nword = [[\"19\", \"18\", \"...\"], [\"19\", \"18.5\", \"...\"], [\"19\", \"19\", \"...\"], [\"19\", \"19.5\", \"...\"], [\"19\", \"20\", \"...\"], [\"19\", \"20\", \"...\"], [\"19\", \"20\", \"...\"], [\"19\", \"19.5\", \"...\"], [\"19\", \"19\", \"...\"], [\"19\", \"18.5\", \"...\"], [\"19\", \"18.25\", \"...\"], [\"19\", \"18\", \"...\"]]\n",
        )
        .unwrap();
        let text = format!("plant = \"plant.toml\"\nspec = \"spec.toml\"\ntheta = \"0.5\"\n{extra}");
        Project::from_config(ProjectConfig::from_toml(&text, dir).unwrap()).unwrap()
    }

    fn scratch(name: &str) -> PathBuf {
        let d = std::env::temp_dir().join(format!("netsynth-pipeline-{name}-{}", std::process::id()));
        let _ = fs::remove_dir_all(&d);
        fs::create_dir_all(&d).unwrap();
        d
    }

    #[test]
    fn heating_check_values() {
        let dir = scratch("check");
        let p = heating_project(&dir, 4, "[falsifier]\nsamples = 500\n");
        let r = check(&p).unwrap();
        assert_eq!(r.contraction, Some(Dec::new(955, 3)));
        assert_eq!(r.plan.mu, Dec::new(5, 1));
        assert_eq!(fmt_real(r.plan.bound), "0.0225");
        assert!(r.render().contains("contraction A = 0.955"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn explicit_eta_rejected() {
        let dir = scratch("eta");
        let p = heating_project(&dir, 4, "mu = \"0.5\"\neta = \"0.03\"\n[falsifier]\nsamples = 10\n");
        let e = check(&p).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_CONFIG);
        assert!(e.to_string().contains("quantization bound"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn printed_parameters_unenforceable() {
        let dir = scratch("unenf");
        let p = heating_project(&dir, 4, "plan_mode = \"budget\"\nmu = \"0.48\"\neta = \"0.02\"\n[falsifier]\nsamples = 10\n");
        let e = synthesize(&p, 1).unwrap_err();
        assert_eq!(e.exit_code(), EXIT_UNENFORCEABLE);
        match e {
            PipelineError::Unenforceable { diagnosis, .. } => assert!(!diagnosis.entries.is_empty()),
            other => panic!("{other}"),
        }
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn synthesize_and_simulate() {
        let dir = scratch("full");
        let p = heating_project(&dir, 4, "[falsifier]\nsamples = 100\n[refine]\nenabled = true\n[simulation]\nsamples = 20\n");
        let r = synthesize(&p, 2).unwrap();
        assert!(r.enforceable && r.faithful);
        let dec = r.dec.as_ref().unwrap();
        assert_eq!(dec.initial_region.lower, crate::decimal::decs(&["18.5", "17.5", "17.5", "17.5"]).unwrap());
        assert!(dec.propq_witness.is_some());
        assert!(r.cen.as_ref().unwrap().trim_identical);
        let s = simulate(&p).unwrap();
        assert!(s.all_pass, "{}", s.render());
        let csv = fs::read_to_string(dir.join("out/trace_dec.csv")).unwrap();
        assert!(csv.starts_with("t,x1,x2,x3,x4,u1,u2,u3,u4,q1,q2,q3,q4,deviation"));
        let _ = fs::remove_dir_all(&dir);
    }

    #[test]
    fn corner_preset_matches_heating() {
        let model = heating::ring_model(5, &heating::paper_input_grid()).unwrap();
        let r = Region::around(crate::decimal::decs(&["19", "18", "18", "18", "18"]).unwrap(), &[1.0; 5], 0.5).unwrap();
        assert_eq!(preset_state(&model, &r, Preset::Corner).unwrap(), heating::corner_preset(5));
    }
}
