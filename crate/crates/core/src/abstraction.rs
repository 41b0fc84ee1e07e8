//! Uniform grid quantizer and the deterministic symbolic models built on it.
//!
//! Component `i` lives on the grid `eta(i) Z^{n_i}`. A real point `z` is
//! mapped to the grid point whose half-open cell `[eta k - eta/2, eta k + eta/2)`
//! contains it.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{OutputLabel, Transition, TransitionSystem};
use crate::decimal::{Dec, DecError};
use crate::plant::{GasCertificate, NetworkModel, PlantError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbstractionError {
    #[error("grid step of component {0} must be positive")]
    NonPositiveEta(usize),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("abstraction would have {states} states, above the cap of {cap}")]
    CapExceeded { states: u128, cap: u64 },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Decimal(#[from] DecError),
}

/// Distance to a cell boundary, in cell units, below which a quantization
/// is flagged as numerically fragile.
pub const BOUNDARY_TOL: f64 = 1e-9;

pub const DEFAULT_ENUMERATION_CAP: u64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GridPoint {
    pub component: usize,
    pub index: Vec<i64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Quantizer {
    eta: Vec<Dec>,
    eta_f: Vec<f64>,
}

impl Quantizer {
    pub fn new(eta: Vec<Dec>) -> Result<Quantizer, AbstractionError> {
        if let Some(i) = eta.iter().position(|e| !e.is_sign_positive_nonzero()) {
            return Err(AbstractionError::NonPositiveEta(i));
        }
        let eta_f = eta.iter().map(Dec::to_f64).collect();
        Ok(Quantizer { eta, eta_f })
    }

    pub fn uniform(eta: Dec, components: usize) -> Result<Quantizer, AbstractionError> {
        Quantizer::new(vec![eta; components])
    }

    pub fn eta(&self, i: usize) -> Dec {
        self.eta[i]
    }

    pub fn etas(&self) -> &[Dec] {
        &self.eta
    }

    /// Largest step over components, the sup-norm of the step vector.
    pub fn max_eta(&self) -> Dec {
        self.eta.iter().copied().max().unwrap_or(Dec::ZERO)
    }

    pub fn quantize(&self, i: usize, z: &[f64]) -> GridPoint {
        self.quantize_flagged(i, z).0
    }

    /// Quantize and report whether any coordinate sits within
    /// [`BOUNDARY_TOL`] cells of a cell boundary.
    pub fn quantize_flagged(&self, i: usize, z: &[f64]) -> (GridPoint, bool) {
        let h = self.eta_f[i];
        let mut near = false;
        let index = z
            .iter()
            .map(|v| {
                let s = v / h + 0.5;
                let k = s.floor();
                if (s - s.round()).abs() < BOUNDARY_TOL {
                    near = true;
                }
                k as i64
            })
            .collect();
        (GridPoint { component: i, index }, near)
    }

    /// Index of a single scalar in component `i`'s grid.
    #[inline]
    pub fn cell(&self, i: usize, v: f64) -> i64 {
        (v / self.eta_f[i] + 0.5).floor() as i64
    }

    /// Exact quantization of a decimal point.
    pub fn quantize_exact(&self, i: usize, z: &[Dec]) -> GridPoint {
        GridPoint { component: i, index: z.iter().map(|v| v.nearest_multiple_index(self.eta[i])).collect() }
    }

    pub fn dequantize(&self, g: &GridPoint) -> Result<Vec<Dec>, DecError> {
        g.index.iter().map(|k| self.eta[g.component].mul_int(*k)).collect()
    }

    /// Nearest double of the exact grid point.
    pub fn dequantize_f64(&self, g: &GridPoint) -> Vec<f64> {
        match self.dequantize(g) {
            Ok(v) => v.iter().map(Dec::to_f64).collect(),
            Err(_) => g.index.iter().map(|k| *k as f64 * self.eta_f[g.component]).collect(),
        }
    }

    /// Whether every coordinate of `z` is a grid value of component `i`.
    pub fn contains_exact(&self, i: usize, z: &[Dec]) -> bool {
        z.iter().all(|v| v.is_multiple_of(self.eta[i]))
    }
}

/// `[psi_i(xi_i, w_i, u_i)]_eta(i)`.
pub fn symbolic_succ(
    model: &NetworkModel,
    q: &Quantizer,
    i: usize,
    xi: &GridPoint,
    w: &[GridPoint],
    u: &[Dec],
) -> Result<GridPoint, AbstractionError> {
    let neighbors = model.neighbors(i)?;
    if w.len() != neighbors.len() || w.iter().zip(neighbors).any(|(g, j)| g.component != *j) {
        return Err(AbstractionError::Dimension(format!("neighbor grid points of component {i}")));
    }
    let x = q.dequantize_f64(xi);
    let wv: Vec<Vec<f64>> = w.iter().map(|g| q.dequantize_f64(g)).collect();
    let wr: Vec<&[f64]> = wv.iter().map(Vec::as_slice).collect();
    let next = model.psi_eval(i, &x, &wr, u)?;
    Ok(q.quantize(i, &next))
}

/// Synchronous successor of the whole network: every component reads the
/// pre-step grid points of its neighbors.
pub fn network_symbolic_succ(
    model: &NetworkModel,
    q: &Quantizer,
    xi: &[GridPoint],
    u: &[Vec<Dec>],
) -> Result<Vec<GridPoint>, AbstractionError> {
    let n = model.n_components();
    if xi.len() != n || u.len() != n {
        return Err(AbstractionError::Dimension(format!("expected {n} grid points and inputs")));
    }
    (0..n)
        .map(|i| {
            let w: Vec<GridPoint> = model.neighbors(i)?.iter().map(|j| xi[*j].clone()).collect();
            symbolic_succ(model, q, i, &xi[i], &w, &u[i])
        })
        .collect()
}

/// `(x, xi) in R_mu`, i.e. `V(x, xi) <= alpha_lo(mu)`.
pub fn in_relation_mu(cert: &GasCertificate, q: &Quantizer, mu: f64, x: &[f64], xi: &[GridPoint]) -> bool {
    let y: Vec<f64> = xi.iter().flat_map(|g| q.dequantize_f64(g)).collect();
    y.len() == x.len() && cert.v(x, &y) <= cert.alpha_lo.eval(mu)
}

/// Mixed-radix decoding of a joint input index, component 0 most significant.
pub fn decode_joint(mut k: u128, sizes: &[usize]) -> Vec<usize> {
    let mut out = vec![0; sizes.len()];
    for (slot, s) in out.iter_mut().zip(sizes).rev() {
        *slot = (k % *s as u128) as usize;
        k /= *s as u128;
    }
    out
}

pub fn encode_joint(idx: &[usize], sizes: &[usize]) -> u128 {
    idx.iter().zip(sizes).fold(0u128, |acc, (k, s)| acc * *s as u128 + *k as u128)
}

/// Explicit symbolic model on the grid points inside `bounds` (one closed
/// interval per component, applied to each of its coordinates). Inputs are
/// joint input indices; transitions leaving the box are dropped.
pub fn enumerate_abstraction(
    model: &NetworkModel,
    q: &Quantizer,
    bounds: &[(Dec, Dec)],
    cap: u64,
) -> Result<(TransitionSystem, Vec<Vec<GridPoint>>), AbstractionError> {
    let n = model.n_components();
    if bounds.len() != n {
        return Err(AbstractionError::Dimension(format!("{} bounds for {n} components", bounds.len())));
    }
    // Per-coordinate index ranges.
    let mut axes: Vec<(usize, i64, i64)> = Vec::new();
    for (i, (lo, hi)) in bounds.iter().enumerate() {
        let eta = q.eta(i);
        let mut kmin = lo.nearest_multiple_index(eta);
        if eta.mul_int(kmin)? < *lo {
            kmin += 1;
        }
        let mut kmax = hi.nearest_multiple_index(eta);
        if eta.mul_int(kmax)? > *hi {
            kmax -= 1;
        }
        for _ in 0..model.dim(i) {
            axes.push((i, kmin, kmax));
        }
    }
    let mut count: u128 = 1;
    for (_, a, b) in &axes {
        count = count.saturating_mul((b - a + 1).max(0) as u128);
    }
    if count > cap as u128 {
        return Err(AbstractionError::CapExceeded { states: count, cap });
    }
    let sizes: Vec<usize> = axes.iter().map(|(_, a, b)| (b - a + 1) as usize).collect();
    let points: Vec<Vec<GridPoint>> = (0..count)
        .map(|s| {
            let digits = decode_joint(s, &sizes);
            let mut pts: Vec<GridPoint> = (0..n).map(|i| GridPoint { component: i, index: Vec::new() }).collect();
            for ((comp, lo, _), d) in axes.iter().zip(digits) {
                pts[*comp].index.push(lo + d as i64);
            }
            pts
        })
        .collect();
    let ids: BTreeMap<&Vec<GridPoint>, usize> = points.iter().enumerate().map(|(k, p)| (p, k)).collect();

    let input_sizes: Vec<usize> = (0..n).map(|i| model.inputs(i).len()).collect();
    let joint: u128 = input_sizes.iter().map(|s| *s as u128).product();
    let mut transitions = Vec::new();
    for (s, p) in points.iter().enumerate() {
        for k in 0..joint {
            let idx = decode_joint(k, &input_sizes);
            let u: Vec<Vec<Dec>> = idx.iter().enumerate().map(|(i, j)| model.inputs(i).point(*j).to_vec()).collect();
            let next = network_symbolic_succ(model, q, p, &u)?;
            if let Some(d) = ids.get(&next) {
                transitions.push(Transition::new(s, k as usize, *d));
            }
        }
    }
    let outputs = points
        .iter()
        .enumerate()
        .map(|(s, p)| {
            let label: Vec<Dec> = p.iter().map(|g| q.dequantize(g)).collect::<Result<Vec<_>, _>>().map(|v| v.concat())?;
            Ok((s, OutputLabel::Point(label)))
        })
        .collect::<Result<BTreeMap<_, _>, DecError>>()?;
    let ts = TransitionSystem::new(0..points.len(), 0..points.len(), [], 0..joint as usize, transitions, outputs)
        .map_err(|e| AbstractionError::Dimension(e.to_string()))?;
    Ok((ts, points))
}
