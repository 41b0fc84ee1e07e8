//! The controlled network: components with coupled dynamics, finite input
//! sets, the dependency graph, and the incremental-stability certificate.
//!
//! Component indices are zero-based everywhere in the API. The global state
//! is the concatenation of the component states in index order.

mod certificate;
mod config;
mod planning;

pub use certificate::{falsify_certificate, Condition, FalsificationReport, GasCertificate, KInfinityFn, Violation};
pub use config::{CertificateConfig, DynamicsConfig, InputConfig, PlantConfig};
pub use planning::{
    accuracy_plan, quantization_bound, thermal_contraction, validate_plan, AccuracyPlan, Constraint, PlanError, PlanMode,
};

use std::fmt;
use std::sync::Arc;

use num_bigint::BigUint;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decimal::{to_f64_vec, Dec, DecError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("component index {0} out of range (network has {1} components)")]
    IndexOutOfRange(usize, usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("input {input:?} is not in the input set of component {component}")]
    InputNotInSet { component: usize, input: Vec<Dec> },
    #[error("input set of component {0} is empty")]
    EmptyInputSet(usize),
    #[error("input set of component {0} does not contain the zero input")]
    MissingZeroInput(usize),
    #[error("invalid dynamics: {0}")]
    Dynamics(String),
    #[error("invalid class-K-infinity function: {0}")]
    KInfinity(String),
    #[error("invalid input grid: {0}")]
    Grid(String),
    #[error("plant config: {0}")]
    Config(String),
    #[error(transparent)]
    Decimal(#[from] DecError),
}

/// Finite input set of one component, kept in lexicographic order of the
/// exact points. Input indices refer to this order.
#[derive(Debug, Clone, PartialEq)]
pub struct InputSet {
    points: Vec<Vec<Dec>>,
    values: Vec<Vec<f64>>,
}

impl InputSet {
    pub fn new(points: impl IntoIterator<Item = Vec<Dec>>) -> InputSet {
        let set: std::collections::BTreeSet<Vec<Dec>> = points.into_iter().collect();
        let points: Vec<Vec<Dec>> = set.into_iter().collect();
        let values = points.iter().map(|p| to_f64_vec(p)).collect();
        InputSet { points, values }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<Dec>] {
        &self.points
    }

    pub fn point(&self, k: usize) -> &[Dec] {
        &self.points[k]
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k]
    }

    pub fn index_of(&self, u: &[Dec]) -> Option<usize> {
        self.points.binary_search_by(|p| p.as_slice().cmp(u)).ok()
    }
}

/// Scalar grid `start, start + step, ..., stop`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputGrid {
    pub start: Dec,
    pub step: Dec,
    pub stop: Dec,
}

impl InputGrid {
    pub fn values(&self) -> Result<Vec<Dec>, PlantError> {
        if !self.step.is_sign_positive_nonzero() {
            return Err(PlantError::Grid("step must be positive".into()));
        }
        let span = self.stop.checked_sub(self.start)?;
        let count = span
            .exact_ratio(self.step)
            .ok_or_else(|| PlantError::Grid(format!("{} to {} is not a multiple of step {}", self.start, self.stop, self.step)))?;
        if count < 0 {
            return Err(PlantError::Grid("stop is below start".into()));
        }
        (0..=count).map(|k| Ok(self.start.checked_add(self.step.mul_int(k)?)?)).collect()
    }

    /// Cartesian power of the scalar grid, one copy per input coordinate.
    pub fn input_set(&self, dim: usize) -> Result<InputSet, PlantError> {
        let vals = self.values()?;
        let mut points: Vec<Vec<Dec>> = vec![Vec::new()];
        for _ in 0..dim {
            points = points
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |v| {
                        let mut q = p.clone();
                        q.push(*v);
                        q
                    })
                })
                .collect();
        }
        Ok(InputSet::new(points))
    }
}

/// Real matrix stored row-major as nested rows.
pub type Matrix = Vec<Vec<f64>>;

fn mat_vec_add(m: &Matrix, v: &[f64], out: &mut [f64]) {
    for (r, row) in m.iter().enumerate() {
        out[r] += row.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
    }
}

fn is_zero_matrix(m: &Matrix) -> bool {
    m.iter().flatten().all(|v| *v == 0.0)
}

fn check_shape(m: &Matrix, rows: usize, cols: usize, what: &str) -> Result<(), PlantError> {
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(PlantError::Dimension(format!("{what}: expected {rows}x{cols} matrix")));
    }
    Ok(())
}

/// Coefficient block `a_ij` coupling state `j` into the update of component `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub row: usize,
    pub col: usize,
    pub matrix: Matrix,
}

/// Parameters of the ring of rooms with heaters:
/// `T_i+ = T_i + a (T_{i+1} + T_{i-1} - 2 T_i) + b (T_e - T_i) + g (T_h - T_i) u_i`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThermalParams {
    pub alpha: Dec,
    pub beta: Dec,
    pub gamma: Dec,
    pub t_ext: Dec,
    pub t_heater: Dec,
}

type ExternFn = dyn Fn(usize, &[f64], &[&[f64]], &[f64]) -> Vec<f64> + Send + Sync;

/// User-supplied update map `(i, x_i, w_i, u_i) -> x_i+` with explicit edges.
#[derive(Clone)]
pub struct ExternDynamics {
    /// `(j, i)`: component `i` reads the state of component `j`.
    pub edges: Vec<(usize, usize)>,
    pub map: Arc<ExternFn>,
}

impl fmt::Debug for ExternDynamics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ExternDynamics").field("edges", &self.edges).finish_non_exhaustive()
    }
}

#[derive(Debug, Clone)]
pub enum Dynamics {
    ThermalRing(ThermalParams),
    /// `x_i+ = sum_j a_ij x_j + B_i u_i + c_i`.
    LinearCoupled { blocks: Vec<Block>, input_gain: Vec<Matrix>, offset: Vec<Vec<f64>> },
    /// `x_i+ = sum_j a_ij x_j + c_i + (G_i + sum_k x_i[k] K_ik) u_i`.
    ControlAffineCoupled {
        blocks: Vec<Block>,
        offset: Vec<Vec<f64>>,
        gain: Vec<Matrix>,
        gain_slope: Vec<Vec<Matrix>>,
    },
    Extern(ExternDynamics),
}

#[derive(Debug, Clone)]
struct Coupling {
    self_block: Option<Matrix>,
    /// Blocks for `neighbors(i)` in the same order.
    neighbor_blocks: Vec<Matrix>,
}

#[derive(Clone)]
enum Compiled {
    Thermal { alpha: f64, beta: f64, gamma: f64, t_ext: f64, t_heater: f64 },
    Linear { coupling: Vec<Coupling>, input_gain: Vec<Matrix>, offset: Vec<Vec<f64>> },
    Affine { coupling: Vec<Coupling>, offset: Vec<Vec<f64>>, gain: Vec<Matrix>, gain_slope: Vec<Vec<Matrix>> },
    Extern(Arc<ExternFn>),
}

impl fmt::Debug for Compiled {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Compiled::Thermal { .. } => "Thermal",
            Compiled::Linear { .. } => "Linear",
            Compiled::Affine { .. } => "Affine",
            Compiled::Extern(_) => "Extern",
        })
    }
}

/// The network of components `x_i(t+1) = f_i(x(t), u_i(t))`.
#[derive(Debug, Clone)]
pub struct NetworkModel {
    dims: Vec<usize>,
    input_dims: Vec<usize>,
    offsets: Vec<usize>,
    input_sets: Vec<InputSet>,
    dynamics: Dynamics,
    compiled: Compiled,
    neighbors: Vec<Vec<usize>>,
}

impl NetworkModel {
    pub fn new(dims: Vec<usize>, input_sets: Vec<InputSet>, dynamics: Dynamics) -> Result<NetworkModel, PlantError> {
        let n = dims.len();
        if n == 0 {
            return Err(PlantError::Dimension("network needs at least one component".into()));
        }
        if input_sets.len() != n {
            return Err(PlantError::Dimension(format!("{} input sets for {n} components", input_sets.len())));
        }
        let mut input_dims = Vec::with_capacity(n);
        for (i, set) in input_sets.iter().enumerate() {
            if set.is_empty() {
                return Err(PlantError::EmptyInputSet(i));
            }
            let m = set.point(0).len();
            if set.points().iter().any(|p| p.len() != m) {
                return Err(PlantError::Dimension(format!("inputs of component {i} have mixed dimensions")));
            }
            if !set.points().iter().any(|p| p.iter().all(Dec::is_zero)) {
                return Err(PlantError::MissingZeroInput(i));
            }
            input_dims.push(m);
        }
        let offsets = dims
            .iter()
            .scan(0, |acc, d| {
                let o = *acc;
                *acc += d;
                Some(o)
            })
            .collect();

        let (neighbors, compiled) = match &dynamics {
            Dynamics::ThermalRing(p) => {
                if n < 3 {
                    return Err(PlantError::Dynamics("thermal ring needs at least 3 components".into()));
                }
                if dims.iter().any(|d| *d != 1) || input_dims.iter().any(|m| *m != 1) {
                    return Err(PlantError::Dynamics("thermal ring components are scalar".into()));
                }
                let neighbors = (0..n)
                    .map(|i| {
                        let mut v = vec![(i + n - 1) % n, (i + 1) % n];
                        v.sort_unstable();
                        v
                    })
                    .collect();
                let compiled = Compiled::Thermal {
                    alpha: p.alpha.to_f64(),
                    beta: p.beta.to_f64(),
                    gamma: p.gamma.to_f64(),
                    t_ext: p.t_ext.to_f64(),
                    t_heater: p.t_heater.to_f64(),
                };
                (neighbors, compiled)
            }
            Dynamics::LinearCoupled { blocks, input_gain, offset } => {
                let (neighbors, coupling) = compile_blocks(&dims, blocks)?;
                check_per_component(input_gain.len(), n, "input_gain")?;
                check_per_component(offset.len(), n, "offset")?;
                for i in 0..n {
                    check_shape(&input_gain[i], dims[i], input_dims[i], "input gain")?;
                    if offset[i].len() != dims[i] {
                        return Err(PlantError::Dimension(format!("offset of component {i}")));
                    }
                }
                let compiled = Compiled::Linear { coupling, input_gain: input_gain.clone(), offset: offset.clone() };
                (neighbors, compiled)
            }
            Dynamics::ControlAffineCoupled { blocks, offset, gain, gain_slope } => {
                let (neighbors, coupling) = compile_blocks(&dims, blocks)?;
                check_per_component(offset.len(), n, "offset")?;
                check_per_component(gain.len(), n, "gain")?;
                check_per_component(gain_slope.len(), n, "gain_slope")?;
                for i in 0..n {
                    check_shape(&gain[i], dims[i], input_dims[i], "input gain")?;
                    if gain_slope[i].len() != dims[i] {
                        return Err(PlantError::Dimension(format!("gain_slope of component {i} needs one matrix per state coordinate")));
                    }
                    for m in &gain_slope[i] {
                        check_shape(m, dims[i], input_dims[i], "gain slope")?;
                    }
                    if offset[i].len() != dims[i] {
                        return Err(PlantError::Dimension(format!("offset of component {i}")));
                    }
                }
                let compiled = Compiled::Affine {
                    coupling,
                    offset: offset.clone(),
                    gain: gain.clone(),
                    gain_slope: gain_slope.clone(),
                };
                (neighbors, compiled)
            }
            Dynamics::Extern(ext) => {
                let mut neighbors = vec![Vec::new(); n];
                for &(j, i) in &ext.edges {
                    if i >= n || j >= n {
                        return Err(PlantError::IndexOutOfRange(i.max(j), n));
                    }
                    if i != j {
                        neighbors[i].push(j);
                    }
                }
                for v in &mut neighbors {
                    v.sort_unstable();
                    v.dedup();
                }
                (neighbors, Compiled::Extern(ext.map.clone()))
            }
        };

        Ok(NetworkModel { dims, input_dims, offsets, input_sets, dynamics, compiled, neighbors })
    }

    pub fn n_components(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn dim(&self, i: usize) -> usize {
        self.dims[i]
    }

    pub fn input_dim(&self, i: usize) -> usize {
        self.input_dims[i]
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().sum()
    }

    pub fn offset(&self, i: usize) -> usize {
        self.offsets[i]
    }

    pub fn dynamics(&self) -> &Dynamics {
        &self.dynamics
    }

    pub fn inputs(&self, i: usize) -> &InputSet {
        &self.input_sets[i]
    }

    pub fn input_sets(&self) -> &[InputSet] {
        &self.input_sets
    }

    /// Number of joint inputs `prod_i |U_i|`.
    pub fn joint_input_count(&self) -> BigUint {
        self.input_sets.iter().map(|s| BigUint::from(s.len())).product()
    }

    /// Same network with different input sets.
    pub fn with_input_sets(&self, input_sets: Vec<InputSet>) -> Result<NetworkModel, PlantError> {
        NetworkModel::new(self.dims.clone(), input_sets, self.dynamics.clone())
    }

    /// Ascending list of the components whose state enters `f_i`.
    pub fn neighbors(&self, i: usize) -> Result<&[usize], PlantError> {
        self.neighbors.get(i).map(Vec::as_slice).ok_or(PlantError::IndexOutOfRange(i, self.n_components()))
    }

    /// Dependency edges `(j, i)`.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.neighbors.iter().enumerate().flat_map(|(i, ns)| ns.iter().map(move |j| (*j, i))).collect()
    }

    pub fn component_slice<'a>(&self, x: &'a [f64], i: usize) -> &'a [f64] {
        &x[self.offsets[i]..self.offsets[i] + self.dims[i]]
    }

    /// Neighbor states of component `i` taken from the global state `x`.
    pub fn gather_neighbors<'a>(&self, x: &'a [f64], i: usize) -> Vec<&'a [f64]> {
        self.neighbors[i].iter().map(|j| self.component_slice(x, *j)).collect()
    }

    fn check_component(&self, i: usize) -> Result<(), PlantError> {
        if i >= self.n_components() {
            return Err(PlantError::IndexOutOfRange(i, self.n_components()));
        }
        Ok(())
    }

    /// `psi_i(x_i, w_i, u_i)` with `u_i` given as an exact point of `U_i`.
    pub fn psi_eval(&self, i: usize, x_i: &[f64], w_i: &[&[f64]], u_i: &[Dec]) -> Result<Vec<f64>, PlantError> {
        self.check_component(i)?;
        let k = self
            .inputs(i)
            .index_of(u_i)
            .ok_or_else(|| PlantError::InputNotInSet { component: i, input: u_i.to_vec() })?;
        if x_i.len() != self.dims[i] {
            return Err(PlantError::Dimension(format!("x_{i} has length {}, expected {}", x_i.len(), self.dims[i])));
        }
        if w_i.len() != self.neighbors[i].len()
            || w_i.iter().zip(&self.neighbors[i]).any(|(w, j)| w.len() != self.dims[*j])
        {
            return Err(PlantError::Dimension(format!("neighbor vector of component {i}")));
        }
        Ok(self.psi_by_index(i, x_i, w_i, k))
    }

    /// `psi_i` with the input given by its index in `U_i`. No validation.
    pub fn psi_by_index(&self, i: usize, x_i: &[f64], w_i: &[&[f64]], k: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dims[i]];
        self.psi_into(i, x_i, w_i, self.input_sets[i].value(k), &mut out);
        out
    }

    /// `psi_i` at a raw input value, written into `out`.
    pub fn psi_into(&self, i: usize, x_i: &[f64], w_i: &[&[f64]], u_i: &[f64], out: &mut [f64]) {
        match &self.compiled {
            Compiled::Thermal { alpha, beta, gamma, t_ext, t_heater } => {
                let x = x_i[0];
                let sum: f64 = w_i.iter().map(|w| w[0]).sum();
                out[0] = x + alpha * (sum - 2.0 * x) + beta * (t_ext - x) + gamma * (t_heater - x) * u_i[0];
            }
            Compiled::Linear { coupling, input_gain, offset } => {
                out.copy_from_slice(&offset[i]);
                apply_coupling(&coupling[i], x_i, w_i, out);
                mat_vec_add(&input_gain[i], u_i, out);
            }
            Compiled::Affine { coupling, offset, gain, gain_slope } => {
                out.copy_from_slice(&offset[i]);
                apply_coupling(&coupling[i], x_i, w_i, out);
                let mut g = gain[i].clone();
                for (k, slope) in gain_slope[i].iter().enumerate() {
                    for (gr, sr) in g.iter_mut().zip(slope) {
                        for (a, b) in gr.iter_mut().zip(sr) {
                            *a += x_i[k] * b;
                        }
                    }
                }
                mat_vec_add(&g, u_i, out);
            }
            Compiled::Extern(f) => {
                let v = f(i, x_i, w_i, u_i);
                out.copy_from_slice(&v);
            }
        }
    }

    /// `f(x, u)` for a joint input given as exact points.
    pub fn step(&self, x: &[f64], u: &[Vec<Dec>]) -> Result<Vec<f64>, PlantError> {
        if x.len() != self.total_dim() {
            return Err(PlantError::Dimension(format!("state has length {}, expected {}", x.len(), self.total_dim())));
        }
        if u.len() != self.n_components() {
            return Err(PlantError::Dimension(format!("{} inputs for {} components", u.len(), self.n_components())));
        }
        let idx = u
            .iter()
            .enumerate()
            .map(|(i, ui)| {
                self.inputs(i).index_of(ui).ok_or_else(|| PlantError::InputNotInSet { component: i, input: ui.clone() })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.step_by_index(x, &idx))
    }

    /// `f(x, u)` with `u` given by per-component input indices.
    pub fn step_by_index(&self, x: &[f64], u: &[usize]) -> Vec<f64> {
        let mut out = vec![0.0; self.total_dim()];
        for i in 0..self.n_components() {
            let w = self.gather_neighbors(x, i);
            let o = self.offsets[i];
            self.psi_into(i, self.component_slice(x, i), &w, self.input_sets[i].value(u[i]), &mut out[o..o + self.dims[i]]);
        }
        out
    }
}

fn check_per_component(len: usize, n: usize, what: &str) -> Result<(), PlantError> {
    if len != n {
        return Err(PlantError::Dimension(format!("{what}: {len} entries for {n} components")));
    }
    Ok(())
}

fn compile_blocks(dims: &[usize], blocks: &[Block]) -> Result<(Vec<Vec<usize>>, Vec<Coupling>), PlantError> {
    let n = dims.len();
    let mut per: Vec<std::collections::BTreeMap<usize, Matrix>> = vec![Default::default(); n];
    for b in blocks {
        if b.row >= n || b.col >= n {
            return Err(PlantError::IndexOutOfRange(b.row.max(b.col), n));
        }
        check_shape(&b.matrix, dims[b.row], dims[b.col], "coupling block")?;
        if per[b.row].insert(b.col, b.matrix.clone()).is_some() {
            return Err(PlantError::Dynamics(format!("duplicate block ({}, {})", b.row, b.col)));
        }
    }
    let mut neighbors = Vec::with_capacity(n);
    let mut coupling = Vec::with_capacity(n);
    for (i, map) in per.into_iter().enumerate() {
        let mut self_block = None;
        let mut ns = Vec::new();
        let mut nb = Vec::new();
        for (j, m) in map {
            if j == i {
                self_block = Some(m);
            } else if !is_zero_matrix(&m) {
                ns.push(j);
                nb.push(m);
            }
        }
        neighbors.push(ns);
        coupling.push(Coupling { self_block, neighbor_blocks: nb });
    }
    Ok((neighbors, coupling))
}

fn apply_coupling(c: &Coupling, x_i: &[f64], w_i: &[&[f64]], out: &mut [f64]) {
    if let Some(a) = &c.self_block {
        mat_vec_add(a, x_i, out);
    }
    for (m, w) in c.neighbor_blocks.iter().zip(w_i) {
        mat_vec_add(m, w, out);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heating;

    fn d(s: &str) -> Dec {
        s.parse().unwrap()
    }

    fn scalar_inputs(vals: &[&str]) -> InputSet {
        InputSet::new(vals.iter().map(|v| vec![d(v)]))
    }

    #[test]
    fn ring_neighbors() {
        let m = heating::ring_model(5, &heating::paper_input_grid()).unwrap();
        assert_eq!(m.neighbors(2).unwrap(), &[1, 3]);
        assert_eq!(m.neighbors(0).unwrap(), &[1, 4]);
        assert!(matches!(m.neighbors(5), Err(PlantError::IndexOutOfRange(5, 5))));
    }

    #[test]
    fn decoupled_linear_has_no_neighbors() {
        let blocks = vec![
            Block { row: 0, col: 0, matrix: vec![vec![0.5]] },
            Block { row: 0, col: 1, matrix: vec![vec![0.0]] },
            Block { row: 1, col: 1, matrix: vec![vec![0.5]] },
        ];
        let m = NetworkModel::new(
            vec![1, 1],
            vec![scalar_inputs(&["0"]), scalar_inputs(&["0"])],
            Dynamics::LinearCoupled { blocks, input_gain: vec![vec![vec![1.0]]; 2], offset: vec![vec![0.0]; 2] },
        )
        .unwrap();
        assert!(m.neighbors(0).unwrap().is_empty());
        assert!(m.neighbors(1).unwrap().is_empty());
    }

    #[test]
    fn thermal_psi_hand_value() {
        let m = heating::ring_model(4, &heating::paper_input_grid()).unwrap();
        let v = m.psi_eval(0, &[19.5], &[&[18.5], &[18.5]], &[d("0")]).unwrap();
        assert!((v[0] - 17.6775).abs() < 1e-12);
    }

    #[test]
    fn thermal_step_symmetric() {
        let m = heating::ring_model(3, &heating::paper_input_grid()).unwrap();
        let x = m.step(&[20.0, 20.0, 20.0], &[vec![d("0")], vec![d("0")], vec![d("0")]]).unwrap();
        for v in x {
            assert!((v - 19.055).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_model_maps_zero() {
        let m = NetworkModel::new(
            vec![2],
            vec![InputSet::new([vec![d("0")], vec![d("1")]])],
            Dynamics::LinearCoupled {
                blocks: vec![],
                input_gain: vec![vec![vec![0.0], vec![0.0]]],
                offset: vec![vec![0.0, 0.0]],
            },
        )
        .unwrap();
        assert_eq!(m.psi_eval(0, &[3.0, -1.0], &[], &[d("1")]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(m.step(&[0.0, 0.0], &[vec![d("0")]]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn identity_drift() {
        let m = NetworkModel::new(
            vec![1, 1],
            vec![scalar_inputs(&["0", "1"]), scalar_inputs(&["0"])],
            Dynamics::LinearCoupled {
                blocks: vec![
                    Block { row: 0, col: 0, matrix: vec![vec![1.0]] },
                    Block { row: 1, col: 1, matrix: vec![vec![1.0]] },
                ],
                input_gain: vec![vec![vec![0.0]]; 2],
                offset: vec![vec![0.0]; 2],
            },
        )
        .unwrap();
        assert_eq!(m.psi_eval(0, &[4.25], &[], &[d("1")]).unwrap(), vec![4.25]);
    }

    #[test]
    fn input_validation() {
        let m = heating::ring_model(3, &heating::paper_input_grid()).unwrap();
        assert!(matches!(
            m.psi_eval(0, &[19.0], &[&[18.0], &[18.0]], &[d("0.0125")]),
            Err(PlantError::InputNotInSet { .. })
        ));
        assert!(matches!(m.psi_eval(0, &[19.0], &[&[18.0]], &[d("0")]), Err(PlantError::Dimension(_))));
        let bad = NetworkModel::new(vec![1], vec![scalar_inputs(&["1"])], Dynamics::LinearCoupled {
            blocks: vec![],
            input_gain: vec![vec![vec![1.0]]],
            offset: vec![vec![0.0]],
        });
        assert!(matches!(bad, Err(PlantError::MissingZeroInput(0))));
        let small = heating::ring_model(2, &heating::paper_input_grid());
        assert!(matches!(small, Err(PlantError::Dynamics(_))));
    }

    #[test]
    fn grid_counts() {
        let g = heating::paper_input_grid();
        assert_eq!(g.values().unwrap().len(), 41);
        let bad = InputGrid { start: d("0"), step: d("0.3"), stop: d("1") };
        assert!(matches!(bad.values(), Err(PlantError::Grid(_))));
        assert_eq!(InputGrid { start: d("-1"), step: d("1"), stop: d("1") }.input_set(2).unwrap().len(), 9);
    }
}
