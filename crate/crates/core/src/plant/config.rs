//! TOML plant description.
//!
//! ```toml
//! components = 4
//! sample_box = [0.0, 50.0]
//!
//! [inputs]
//! start = "0"
//! step = "0.025"
//! stop = "1"
//!
//! [dynamics]
//! kind = "thermal_ring"
//! alpha = "0.45"
//! beta = "0.045"
//! gamma = "0.09"
//! t_ext = "-1"
//! t_heater = "50"
//!
//! [certificate]
//! weights = [1.0]
//! alpha_lo = { kind = "linear", c = 1.0 }
//! alpha_hi = { kind = "linear", c = 1.0 }
//! rho = { kind = "linear", c = 0.045 }
//! sigma = { kind = "linear", c = 1.0 }
//! ```
//!
//! Single-entry lists (`weights`, `input_gain`, `offset`, ...) are broadcast
//! to every component.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Block, Dynamics, GasCertificate, InputGrid, InputSet, KInfinityFn, Matrix, NetworkModel, PlantError, ThermalParams};
use crate::decimal::Dec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Dims {
    Uniform(usize),
    PerComponent(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InputConfig {
    Grid {
        start: Dec,
        step: Dec,
        stop: Dec,
        #[serde(default = "one")]
        dim: usize,
    },
    List {
        values: Vec<Vec<Dec>>,
    },
}

fn one() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DynamicsConfig {
    ThermalRing(ThermalParams),
    LinearCoupled {
        #[serde(default)]
        self_gain: Option<Matrix>,
        #[serde(default)]
        blocks: Vec<Block>,
        input_gain: Vec<Matrix>,
        #[serde(default)]
        offset: Vec<Vec<f64>>,
    },
    ControlAffineCoupled {
        #[serde(default)]
        self_gain: Option<Matrix>,
        #[serde(default)]
        blocks: Vec<Block>,
        #[serde(default)]
        offset: Vec<Vec<f64>>,
        gain: Vec<Matrix>,
        #[serde(default)]
        gain_slope: Vec<Vec<Matrix>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertificateConfig {
    pub weights: Vec<f64>,
    pub alpha_lo: KInfinityFn,
    pub alpha_hi: KInfinityFn,
    pub rho: KInfinityFn,
    pub sigma: KInfinityFn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantConfig {
    pub components: usize,
    #[serde(default)]
    pub dims: Option<Dims>,
    pub inputs: InputConfig,
    pub dynamics: DynamicsConfig,
    pub certificate: CertificateConfig,
    /// Expected dependency edges `[j, i]`; checked against the dynamics.
    #[serde(default)]
    pub edges: Option<Vec<(usize, usize)>>,
    /// Per-coordinate sampling interval for the certificate falsifier.
    #[serde(default)]
    pub sample_box: Option<(f64, f64)>,
}

fn broadcast<T: Clone>(v: &[T], n: usize, what: &str) -> Result<Vec<T>, PlantError> {
    match v.len() {
        1 => Ok(vec![v[0].clone(); n]),
        k if k == n => Ok(v.to_vec()),
        k => Err(PlantError::Dimension(format!("{what}: {k} entries for {n} components"))),
    }
}

fn with_self_blocks(self_gain: &Option<Matrix>, blocks: &[Block], n: usize) -> Vec<Block> {
    let mut all: Vec<Block> = self_gain
        .iter()
        .flat_map(|m| (0..n).map(move |i| Block { row: i, col: i, matrix: m.clone() }))
        .collect();
    all.extend(blocks.iter().cloned());
    all
}

impl PlantConfig {
    pub fn from_toml(text: &str) -> Result<PlantConfig, PlantError> {
        toml::from_str(text).map_err(|e| PlantError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<PlantConfig, PlantError> {
        let text = std::fs::read_to_string(path).map_err(|e| PlantError::Config(format!("{}: {e}", path.display())))?;
        PlantConfig::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("plant config serializes")
    }

    pub fn dims(&self) -> Vec<usize> {
        match &self.dims {
            None => vec![1; self.components],
            Some(Dims::Uniform(d)) => vec![*d; self.components],
            Some(Dims::PerComponent(v)) => v.clone(),
        }
    }

    /// The scalar grid when inputs are given as one.
    pub fn input_grid(&self) -> Option<(InputGrid, usize)> {
        match &self.inputs {
            InputConfig::Grid { start, step, stop, dim } => {
                Some((InputGrid { start: *start, step: *step, stop: *stop }, *dim))
            }
            InputConfig::List { .. } => None,
        }
    }

    fn input_sets(&self) -> Result<Vec<InputSet>, PlantError> {
        let set = match &self.inputs {
            InputConfig::Grid { start, step, stop, dim } => {
                InputGrid { start: *start, step: *step, stop: *stop }.input_set(*dim)?
            }
            InputConfig::List { values } => InputSet::new(values.iter().cloned()),
        };
        Ok(vec![set; self.components])
    }

    fn dynamics_descriptor(&self, dims: &[usize]) -> Result<Dynamics, PlantError> {
        let n = self.components;
        let zeros = |dims: &[usize]| dims.iter().map(|d| vec![0.0; *d]).collect::<Vec<_>>();
        Ok(match &self.dynamics {
            DynamicsConfig::ThermalRing(p) => Dynamics::ThermalRing(p.clone()),
            DynamicsConfig::LinearCoupled { self_gain, blocks, input_gain, offset } => Dynamics::LinearCoupled {
                blocks: with_self_blocks(self_gain, blocks, n),
                input_gain: broadcast(input_gain, n, "input_gain")?,
                offset: if offset.is_empty() { zeros(dims) } else { broadcast(offset, n, "offset")? },
            },
            DynamicsConfig::ControlAffineCoupled { self_gain, blocks, offset, gain, gain_slope } => {
                let gain = broadcast(gain, n, "gain")?;
                let gain_slope = if gain_slope.is_empty() {
                    (0..n).map(|i| vec![vec![vec![0.0; gain[i].first().map_or(0, Vec::len)]; dims[i]]; dims[i]]).collect()
                } else {
                    broadcast(gain_slope, n, "gain_slope")?
                };
                Dynamics::ControlAffineCoupled {
                    blocks: with_self_blocks(self_gain, blocks, n),
                    offset: if offset.is_empty() { zeros(dims) } else { broadcast(offset, n, "offset")? },
                    gain,
                    gain_slope,
                }
            }
        })
    }

    pub fn build(&self) -> Result<(NetworkModel, GasCertificate), PlantError> {
        let dims = self.dims();
        if dims.len() != self.components {
            return Err(PlantError::Dimension(format!("{} dims for {} components", dims.len(), self.components)));
        }
        let model = NetworkModel::new(dims.clone(), self.input_sets()?, self.dynamics_descriptor(&dims)?)?;
        if let Some(edges) = &self.edges {
            let mut expected = edges.clone();
            expected.sort_unstable();
            expected.dedup();
            let mut actual = model.edges();
            actual.sort_unstable();
            if expected != actual {
                return Err(PlantError::Dynamics(format!("declared edges {expected:?} differ from the dynamics {actual:?}")));
            }
        }
        let cert = self.certificate(&model)?;
        Ok((model, cert))
    }

    fn certificate(&self, model: &NetworkModel) -> Result<GasCertificate, PlantError> {
        let total = model.total_dim();
        let weights = match self.certificate.weights.len() {
            1 => vec![self.certificate.weights[0]; total],
            _ => self.certificate.weights.clone(),
        };
        let cert = GasCertificate {
            weights,
            alpha_lo: self.certificate.alpha_lo.clone(),
            alpha_hi: self.certificate.alpha_hi.clone(),
            rho: self.certificate.rho.clone(),
            sigma: self.certificate.sigma.clone(),
        };
        cert.validate(total)?;
        Ok(cert)
    }

    pub fn sample_box(&self, total_dim: usize) -> Vec<(f64, f64)> {
        vec![self.sample_box.unwrap_or((-1.0, 1.0)); total_dim]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINEAR: &str = r#"
components = 3
[inputs]
values = [["-1"], ["0"], ["1"]]
[dynamics]
kind = "linear_coupled"
self_gain = [[-2.0]]
input_gain = [[[1.0]]]
[certificate]
weights = [1.0]
alpha_lo = { kind = "linear", c = 1.0 }
alpha_hi = { kind = "linear", c = 1.0 }
rho = { kind = "linear", c = 0.045 }
sigma = { kind = "linear", c = 1.0 }
"#;

    #[test]
    fn builds_decoupled_linear() {
        let cfg = PlantConfig::from_toml(LINEAR).unwrap();
        let (m, c) = cfg.build().unwrap();
        assert_eq!(m.n_components(), 3);
        assert_eq!(m.inputs(0).len(), 3);
        assert!(m.edges().is_empty());
        assert_eq!(c.weights.len(), 3);
        assert_eq!(m.psi_by_index(1, &[1.5], &[], 2), vec![-2.0]);
    }

    #[test]
    fn checks_declared_edges() {
        let text = LINEAR.replace("components = 3", "components = 3\nedges = [[0, 1]]");
        let cfg = PlantConfig::from_toml(&text).unwrap();
        assert!(matches!(cfg.build(), Err(PlantError::Dynamics(_))));
    }

    #[test]
    fn unknown_field_rejected() {
        let bad = LINEAR.replace("components = 3", "components = 3\nbogus = 1");
        assert!(matches!(PlantConfig::from_toml(&bad), Err(PlantError::Config(_))));
    }
}
