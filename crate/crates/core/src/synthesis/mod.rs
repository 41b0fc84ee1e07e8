//! On-the-fly synthesis: for every step the specification asks for, find
//! the local inputs that move each component's grid point to the next
//! set-point cell, keep the feasible steps, trim, pick a word and extract
//! controllers.

mod controllers;
mod diagnose;
mod feasibility;
mod refine;
mod word;

pub use controllers::{
    check_propq, check_propq_and_static, extract_cen_controller, extract_dec_controllers, CenController, CenEdge,
    DecControllerSet, PropqWitness, Region, RegionSet, StaticFeedback, StaticRule,
};
pub use diagnose::{diagnose, Diagnosis, DiagnosticEntry};
pub use feasibility::{
    algorithm1, algorithm2, build_controlled_spec, indicator_i, Alg1Result, Alg2Result, ControlledSpec, Counters,
    FactoredSet, FeasibilityTable, Mode,
};
pub use refine::{refine_inputs, RefineAttempt, RefineOutcome, RefineTarget};
pub use word::{select_word, SelectedWord, WordPolicy};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abstraction::AbstractionError;
use crate::decimal::DecError;
use crate::plant::PlantError;
use crate::specification::SpecError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("specification unenforceable: the trimmed controlled system is empty")]
    Unenforceable,
    #[error("word policy cannot be met: {0}")]
    Word(String),
    #[error("word step {step} is not a retained transition")]
    MissingTransition { step: usize },
    #[error("input {input} of component {component} at step {step} does not reproduce the target cell")]
    ReplayMismatch { step: usize, component: usize, input: String },
    #[error("literal joint enumeration of {count} tuples exceeds the cap {cap}")]
    CapExceeded { count: String, cap: u128 },
    #[error("factored and literal joint input sets differ at transition {0}")]
    FactoredMismatch(usize),
    #[error("worker pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Abstraction(#[from] AbstractionError),
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Decimal(#[from] DecError),
}

/// Knobs shared by the synthesis routines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[derive(Default)]
pub struct SynthesisOptions {
    /// Worker threads for per-component evaluation; `0` uses the global pool.
    pub workers: usize,
    /// Accept successor cells within this many cells of the target. Any
    /// value other than `0` departs from the exact condition and taints the
    /// results.
    pub slack: u64,
}


impl SynthesisOptions {
    pub fn faithful(&self) -> bool {
        self.slack == 0
    }

    pub(crate) fn run<R: Send>(&self, f: impl FnOnce() -> R + Send) -> Result<R, SynthesisError> {
        if self.workers == 0 {
            return Ok(f());
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| SynthesisError::Pool(e.to_string()))?;
        Ok(pool.install(f))
    }
}
