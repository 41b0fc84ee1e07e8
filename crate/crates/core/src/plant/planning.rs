//! Choice of the abstraction accuracy `mu` and the grid step `eta`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{GasCertificate, PlantError};
use crate::decimal::{nice_decimals_descending, Dec, DecError};

/// Contraction factor of the thermal ring in the sup-norm,
/// `max(|1 - 2a - b - g|, |1 - 2a - b|) + 2a`, computed exactly.
pub fn thermal_contraction(alpha: Dec, beta: Dec, gamma: Dec) -> Result<Dec, DecError> {
    let two_a = alpha.mul_int(2)?;
    let base = Dec::ONE.checked_sub(two_a)?.checked_sub(beta)?;
    let heated = base.checked_sub(gamma)?;
    base.abs().max(heated.abs()).checked_add(two_a)
}

/// Largest uniform grid step allowed by the certificate at accuracy `mu`:
/// `min(sigma^-1(rho(alpha_lo(mu))), alpha_hi^-1(alpha_lo(mu)))`.
pub fn quantization_bound(cert: &GasCertificate, mu: f64) -> Result<f64, PlantError> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(PlantError::KInfinity(format!("mu must be positive, got {mu}")));
    }
    let a = cert.alpha_lo.eval(mu);
    let via_rho = cert.sigma.inverse(cert.rho.eval(a))?;
    let via_hi = cert.alpha_hi.inverse(a)?;
    Ok(via_rho.min(via_hi))
}

/// How the accuracy budget `theta` is split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlanMode {
    /// `mu + eta/2 <= theta`, no grid requirement on the set-points.
    Budget,
    /// Every set-point lies on the grid, so `mu <= theta` suffices.
    GridAligned,
}

impl std::fmt::Display for PlanMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            PlanMode::Budget => "budget",
            PlanMode::GridAligned => "grid_aligned",
        })
    }
}

impl std::str::FromStr for PlanMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "budget" => Ok(PlanMode::Budget),
            "grid_aligned" => Ok(PlanMode::GridAligned),
            other => Err(format!("unknown plan mode `{other}` (expected budget or grid_aligned)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// `eta <= quantization_bound(mu)`
    QuantizationBound { eta: Dec, bound: f64 },
    /// `mu + eta/2 <= theta`
    AccuracyBudget { mu: Dec, eta: Dec, theta: Dec },
    /// `mu <= theta`
    MuAboveTheta { mu: Dec, theta: Dec },
    /// Set-point coordinates that are not multiples of `eta`.
    GridContainment { eta: Dec, offending: Vec<Dec> },
    NonPositive { what: String },
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Constraint::QuantizationBound { eta, bound } => {
                write!(f, "eta = {eta} exceeds the quantization bound {bound}")
            }
            Constraint::AccuracyBudget { mu, eta, theta } => write!(f, "mu + eta/2 = {mu} + {eta}/2 exceeds theta = {theta}"),
            Constraint::MuAboveTheta { mu, theta } => write!(f, "mu = {mu} exceeds theta = {theta}"),
            Constraint::GridContainment { eta, offending } => {
                let list: Vec<String> = offending.iter().map(Dec::to_string).collect();
                write!(f, "set-point coordinates {} are not multiples of eta = {eta}", list.join(", "))
            }
            Constraint::NonPositive { what } => write!(f, "{what} must be positive"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("infeasible accuracy parameters: {constraint}{}", alternatives_note(.alternatives))]
    Infeasible { constraint: Constraint, alternatives: Vec<Dec> },
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Decimal(#[from] DecError),
}

fn alternatives_note(alts: &[Dec]) -> String {
    if alts.is_empty() {
        String::new()
    } else {
        let list: Vec<String> = alts.iter().map(Dec::to_string).collect();
        format!("; compliant eta values: {}", list.join(", "))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPlan {
    pub mode: PlanMode,
    pub theta: Dec,
    pub mu: Dec,
    pub eta: Dec,
    /// `quantization_bound(mu)`
    pub bound: f64,
    /// Whether every set-point coordinate is a multiple of `eta`.
    pub grid_containment: bool,
}

const BOUND_SLACK: f64 = 1e-12;
const MU_DIGITS: u32 = 6;
const MAX_ALTERNATIVES: usize = 3;

fn off_grid(y_q: &[Vec<Dec>], eta: Dec) -> Vec<Dec> {
    let set: std::collections::BTreeSet<Dec> =
        y_q.iter().flatten().filter(|c| !c.is_multiple_of(eta)).copied().collect();
    set.into_iter().collect()
}

fn grid_compatible(y_q: &[Vec<Dec>], bound: f64) -> impl Iterator<Item = Dec> + '_ {
    nice_decimals_descending(bound).filter(move |eta| off_grid(y_q, *eta).is_empty())
}

/// Check an explicit `(mu, eta)` against the certificate and the mode's
/// accuracy inequality. The error names the first violated constraint.
pub fn validate_plan(
    cert: &GasCertificate,
    theta: Dec,
    y_q: &[Vec<Dec>],
    mode: PlanMode,
    mu: Dec,
    eta: Dec,
) -> Result<AccuracyPlan, PlanError> {
    for (what, v) in [("theta", theta), ("mu", mu), ("eta", eta)] {
        if !v.is_sign_positive_nonzero() {
            return Err(PlanError::Infeasible {
                constraint: Constraint::NonPositive { what: what.into() },
                alternatives: vec![],
            });
        }
    }
    let bound = quantization_bound(cert, mu.to_f64())?;
    if eta.to_f64() > bound * (1.0 + BOUND_SLACK) {
        let alternatives = match mode {
            PlanMode::Budget => nice_decimals_descending(bound).take(MAX_ALTERNATIVES).collect(),
            PlanMode::GridAligned => grid_compatible(y_q, bound).take(MAX_ALTERNATIVES).collect(),
        };
        return Err(PlanError::Infeasible { constraint: Constraint::QuantizationBound { eta, bound }, alternatives });
    }
    let offending = off_grid(y_q, eta);
    match mode {
        PlanMode::Budget => {
            let half = eta.checked_mul(Dec::new(5, 1))?;
            if mu.checked_add(half)? > theta {
                return Err(PlanError::Infeasible {
                    constraint: Constraint::AccuracyBudget { mu, eta, theta },
                    alternatives: vec![],
                });
            }
        }
        PlanMode::GridAligned => {
            if mu > theta {
                return Err(PlanError::Infeasible { constraint: Constraint::MuAboveTheta { mu, theta }, alternatives: vec![] });
            }
            if !offending.is_empty() {
                return Err(PlanError::Infeasible {
                    constraint: Constraint::GridContainment { eta, offending },
                    alternatives: grid_compatible(y_q, bound).take(MAX_ALTERNATIVES).collect(),
                });
            }
        }
    }
    Ok(AccuracyPlan { mode, theta, mu, eta, bound, grid_containment: offending.is_empty() })
}

/// Pick `mu` as large as the mode allows and then the largest nice decimal
/// `eta` (`k 10^e`, `k` in {1, 2, 2.5, 5}) compatible with it.
pub fn accuracy_plan(cert: &GasCertificate, theta: Dec, y_q: &[Vec<Dec>], mode: PlanMode) -> Result<AccuracyPlan, PlanError> {
    if !theta.is_sign_positive_nonzero() {
        return Err(PlanError::Infeasible {
            constraint: Constraint::NonPositive { what: "theta".into() },
            alternatives: vec![],
        });
    }
    let mu = match mode {
        PlanMode::GridAligned => theta,
        PlanMode::Budget => budget_mu(cert, theta.to_f64())?,
    };
    let bound = quantization_bound(cert, mu.to_f64())?;
    let eta = match mode {
        PlanMode::Budget => nice_decimals_descending(bound).next(),
        PlanMode::GridAligned => grid_compatible(y_q, bound).next(),
    }
    .ok_or_else(|| PlanError::Infeasible {
        constraint: Constraint::QuantizationBound { eta: Dec::ZERO, bound },
        alternatives: vec![],
    })?;
    validate_plan(cert, theta, y_q, mode, mu, eta)
}

/// Largest `mu` in `(0, theta]` with `mu + bound(mu)/2 <= theta`, by bisection,
/// rounded down to six decimals.
fn budget_mu(cert: &GasCertificate, theta: f64) -> Result<Dec, PlanError> {
    let g = |mu: f64| -> Result<f64, PlantError> { Ok(mu + quantization_bound(cert, mu)? / 2.0) };
    let (mut lo, mut hi) = (0.0, theta);
    if g(hi)? <= theta {
        lo = hi;
    } else {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if g(mid)? <= theta {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let scale = 10f64.powi(MU_DIGITS as i32);
    let m = (lo * scale).floor() as i64;
    if m <= 0 {
        return Err(PlanError::Infeasible {
            constraint: Constraint::NonPositive { what: "mu".into() },
            alternatives: vec![],
        });
    }
    Ok(Dec::new(m, MU_DIGITS))
}
