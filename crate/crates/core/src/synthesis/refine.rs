//! Search for an input grid fine enough for the spec to become enforceable.

use serde::{Deserialize, Serialize};

use super::feasibility::{algorithm1, Alg1Result};
use super::{SynthesisError, SynthesisOptions};
use crate::abstraction::Quantizer;
use crate::decimal::{nice_decimals_descending, Dec};
use crate::plant::{InputGrid, NetworkModel};
use crate::specification::TransitionSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RefineTarget {
    /// Some marked word survives.
    Nonempty,
    /// Every spec step survives: the trim equals the trim of the spec system.
    Full,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RefineAttempt {
    pub step: Dec,
    pub inputs_per_component: usize,
    pub retained: usize,
    pub trim_states: usize,
    pub satisfied: bool,
}

#[derive(Debug, Clone)]
pub struct RefineOutcome {
    pub grid: InputGrid,
    pub model: NetworkModel,
    pub result: Alg1Result,
    pub attempts: Vec<RefineAttempt>,
    pub satisfied: bool,
}

fn satisfied(r: &Alg1Result, sq: &TransitionSpec, target: RefineTarget) -> bool {
    match target {
        RefineTarget::Nonempty => !r.spec.trim.is_empty(),
        RefineTarget::Full => !r.spec.trim.is_empty() && r.spec.trim == sq.system().trim(),
    }
}

/// Run the decentralized synthesis on `base`, then on successively finer
/// grids with nice-decimal steps (`k 10^e`, `k` in {1, 2, 2.5, 5}) that
/// keep both endpoints and zero on the grid. Stops at the first grid meeting
/// `target` or when a grid would exceed `max_inputs` values per component.
pub fn refine_inputs(
    model: &NetworkModel,
    base: &InputGrid,
    q: &Quantizer,
    sq: &TransitionSpec,
    target: RefineTarget,
    max_inputs: usize,
    opts: &SynthesisOptions,
) -> Result<RefineOutcome, SynthesisError> {
    let steps = std::iter::once(base.step).chain(
        nice_decimals_descending(base.step.to_f64())
            .filter(|s| *s < base.step && base.start.is_multiple_of(*s) && base.stop.is_multiple_of(*s)),
    );
    let mut attempts = Vec::new();
    let mut last: Option<RefineOutcome> = None;
    for step in steps {
        let grid = InputGrid { start: base.start, step, stop: base.stop };
        let values = grid.values()?;
        if values.len() > max_inputs {
            break;
        }
        let sets = (0..model.n_components()).map(|i| grid.input_set(model.input_dim(i))).collect::<Result<Vec<_>, _>>()?;
        let refined = model.with_input_sets(sets)?;
        let result = algorithm1(&refined, q, sq, opts)?;
        let ok = satisfied(&result, sq, target);
        attempts.push(RefineAttempt {
            step,
            inputs_per_component: values.len(),
            retained: result.table.retained().len(),
            trim_states: result.spec.trim.states().len(),
            satisfied: ok,
        });
        last = Some(RefineOutcome { grid, model: refined, result, attempts: Vec::new(), satisfied: ok });
        if ok {
            break;
        }
    }
    let mut out = match last {
        Some(o) => o,
        None => {
            let result = algorithm1(model, q, sq, opts)?;
            let ok = satisfied(&result, sq, target);
            RefineOutcome { grid: base.clone(), model: model.clone(), result, attempts: Vec::new(), satisfied: ok }
        }
    };
    out.attempts = attempts;
    Ok(out)
}
