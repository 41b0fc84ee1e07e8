//! Incremental-stability certificates and a sampling falsifier.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{NetworkModel, PlantError};

/// Class-K-infinity function on `[0, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KInfinityFn {
    /// `c s`
    Linear { c: f64 },
    /// `c s^p`
    Power { c: f64, p: f64 },
    /// Piecewise linear through `points`, extended linearly past the last one.
    Table { points: Vec<(f64, f64)> },
}

const INVERSE_TOL: f64 = 1e-12;

impl KInfinityFn {
    pub fn identity() -> KInfinityFn {
        KInfinityFn::Linear { c: 1.0 }
    }

    pub fn validate(&self) -> Result<(), PlantError> {
        match self {
            KInfinityFn::Linear { c } if !(c.is_finite() && *c > 0.0) => {
                Err(PlantError::KInfinity(format!("linear coefficient {c} must be positive")))
            }
            KInfinityFn::Power { c, p } if !(c.is_finite() && *c > 0.0 && p.is_finite() && *p > 0.0) => {
                Err(PlantError::KInfinity(format!("power function {c} s^{p} needs c > 0, p > 0")))
            }
            KInfinityFn::Table { points } => {
                if points.len() < 2 || points[0] != (0.0, 0.0) {
                    return Err(PlantError::KInfinity("table must start at (0, 0) and have two or more points".into()));
                }
                if points.windows(2).any(|w| !(w[1].0 > w[0].0 && w[1].1 > w[0].1)) {
                    return Err(PlantError::KInfinity("table must be strictly increasing".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        match self {
            KInfinityFn::Linear { c } => c * s,
            KInfinityFn::Power { c, p } => c * s.powf(*p),
            KInfinityFn::Table { points } => {
                let k = points.partition_point(|(x, _)| *x <= s).clamp(1, points.len() - 1);
                let (x0, y0) = points[k - 1];
                let (x1, y1) = points[k];
                y0 + (s - x0) * (y1 - y0) / (x1 - x0)
            }
        }
    }

    /// `gamma^{-1}(y)`. Closed form where available, bisection otherwise.
    pub fn inverse(&self, y: f64) -> Result<f64, PlantError> {
        if !(y >= 0.0 && y.is_finite()) {
            return Err(PlantError::KInfinity(format!("cannot invert at {y}")));
        }
        match self {
            KInfinityFn::Linear { c } => Ok(y / c),
            KInfinityFn::Power { c, p } => Ok((y / c).powf(1.0 / p)),
            KInfinityFn::Table { .. } => {
                let mut hi = 1.0;
                while self.eval(hi) < y {
                    hi *= 2.0;
                    if !hi.is_finite() {
                        return Err(PlantError::KInfinity("inverse diverged".into()));
                    }
                }
                let mut lo = 0.0;
                while hi - lo > INVERSE_TOL * hi.max(1.0) {
                    let mid = 0.5 * (lo + hi);
                    if self.eval(mid) < y {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                Ok(0.5 * (lo + hi))
            }
        }
    }
}

/// Weighted sup-norm Lyapunov function `V(x, y) = max_k w_k |x_k - y_k|`
/// with its comparison functions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GasCertificate {
    pub weights: Vec<f64>,
    pub alpha_lo: KInfinityFn,
    pub alpha_hi: KInfinityFn,
    pub rho: KInfinityFn,
    pub sigma: KInfinityFn,
}

impl GasCertificate {
    pub fn validate(&self, total_dim: usize) -> Result<(), PlantError> {
        if self.weights.len() != total_dim {
            return Err(PlantError::Dimension(format!("{} weights for state dimension {total_dim}", self.weights.len())));
        }
        if self.weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(PlantError::Dimension("weights must be positive".into()));
        }
        for f in [&self.alpha_lo, &self.alpha_hi, &self.rho, &self.sigma] {
            f.validate()?;
        }
        Ok(())
    }

    pub fn v(&self, x: &[f64], y: &[f64]) -> f64 {
        self.weights.iter().zip(x.iter().zip(y)).map(|(w, (a, b))| w * (a - b).abs()).fold(0.0, f64::max)
    }

    /// Half-widths of the box `{x : V(x, c) <= r}` around a center `c`.
    pub fn ball_half_widths(&self, r: f64) -> Vec<f64> {
        self.weights.iter().map(|w| r / w).collect()
    }
}

pub(crate) fn norm_inf_diff(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `alpha_lo(|x - x'|) <= V(x, x')`
    LowerBound,
    /// `V(x, x') <= alpha_hi(|x - x'|)`
    UpperBound,
    /// `V(f(x,u), f(x',u)) - V(x, x') <= -rho(V(x, x'))`
    Decrease,
    /// `|V(x, x') - V(x, z)| <= sigma(|x' - z|)`
    Continuity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub sample: u64,
    pub condition: Condition,
    pub x: Vec<f64>,
    pub x_prime: Vec<f64>,
    pub z: Vec<f64>,
    pub input: Vec<usize>,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsificationReport {
    pub samples: u64,
    pub seed: u64,
    pub violation: Option<Violation>,
}

impl FalsificationReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

impl std::fmt::Display for FalsificationReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match &self.violation {
            None => write!(f, "no violation found in {} samples (seed {})", self.samples, self.seed),
            Some(v) => write!(
                f,
                "violation of {:?} at sample {}: lhs {} > rhs {} (x = {:?}, x' = {:?}, u = {:?})",
                v.condition, v.sample, v.lhs, v.rhs, v.x, v.x_prime, v.input
            ),
        }
    }
}

const FALSIFY_TOL: f64 = 1e-9;

fn exceeds(lhs: f64, rhs: f64) -> bool {
    lhs > rhs + FALSIFY_TOL * (1.0 + rhs.abs())
}

/// Sample `samples` triples `(x, x', z)` uniformly in `state_box` and one
/// joint input each, and check the four certificate conditions. Sample `k`
/// draws from its own ChaCha8 stream so the outcome does not depend on how
/// the work is split; the lowest-index violation is reported.
pub fn falsify_certificate(
    model: &NetworkModel,
    cert: &GasCertificate,
    state_box: &[(f64, f64)],
    samples: u64,
    seed: u64,
) -> Result<FalsificationReport, PlantError> {
    let n = model.total_dim();
    cert.validate(n)?;
    if state_box.len() != n {
        return Err(PlantError::Dimension(format!("sampling box has {} coordinates, expected {n}", state_box.len())));
    }
    let violation = (0..samples).into_par_iter().find_map_first(|k| check_sample(model, cert, state_box, seed, k));
    Ok(FalsificationReport { samples, seed, violation })
}

fn check_sample(
    model: &NetworkModel,
    cert: &GasCertificate,
    state_box: &[(f64, f64)],
    seed: u64,
    k: u64,
) -> Option<Violation> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k);
    let draw = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        state_box.iter().map(|(lo, hi)| if hi > lo { rng.gen_range(*lo..*hi) } else { *lo }).collect()
    };
    let x = draw(&mut rng);
    let xp = draw(&mut rng);
    let z = draw(&mut rng);
    let u: Vec<usize> = (0..model.n_components()).map(|i| rng.gen_range(0..model.inputs(i).len())).collect();

    let v = cert.v(&x, &xp);
    let d = norm_inf_diff(&x, &xp);
    let fx = model.step_by_index(&x, &u);
    let fxp = model.step_by_index(&xp, &u);
    let checks = [
        (Condition::LowerBound, cert.alpha_lo.eval(d), v),
        (Condition::UpperBound, v, cert.alpha_hi.eval(d)),
        (Condition::Decrease, cert.v(&fx, &fxp) - v, -cert.rho.eval(v)),
        (Condition::Continuity, (v - cert.v(&x, &z)).abs(), cert.sigma.eval(norm_inf_diff(&xp, &z))),
    ];
    checks.into_iter().find(|(_, lhs, rhs)| exceeds(*lhs, *rhs)).map(|(condition, lhs, rhs)| Violation {
        sample: k,
        condition,
        x: x.clone(),
        x_prime: xp.clone(),
        z: z.clone(),
        input: u.clone(),
        lhs,
        rhs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_inverse_round_trip() {
        let f = KInfinityFn::Table { points: vec![(0.0, 0.0), (1.0, 2.0), (3.0, 3.0)] };
        f.validate().unwrap();
        assert_eq!(f.eval(0.5), 1.0);
        assert_eq!(f.eval(5.0), 4.0);
        for y in [0.0, 0.3, 2.0, 2.7, 10.0] {
            assert!((f.eval(f.inverse(y).unwrap()) - y).abs() < 1e-9);
        }
    }

    #[test]
    fn power_inverse() {
        let f = KInfinityFn::Power { c: 2.0, p: 3.0 };
        assert!((f.inverse(f.eval(1.7)).unwrap() - 1.7).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_functions() {
        assert!(KInfinityFn::Linear { c: 0.0 }.validate().is_err());
        assert!(KInfinityFn::Table { points: vec![(0.0, 0.0), (1.0, 1.0), (1.0, 2.0)] }.validate().is_err());
        assert!(KInfinityFn::Table { points: vec![(0.0, 1.0), (1.0, 2.0)] }.validate().is_err());
    }

    #[test]
    fn weighted_sup_norm() {
        let c = GasCertificate {
            weights: vec![1.0, 2.0],
            alpha_lo: KInfinityFn::identity(),
            alpha_hi: KInfinityFn::identity(),
            rho: KInfinityFn::identity(),
            sigma: KInfinityFn::identity(),
        };
        assert_eq!(c.v(&[0.0, 0.0], &[1.0, -1.0]), 2.0);
        assert_eq!(c.ball_half_widths(1.0), vec![1.0, 0.5]);
    }
}
