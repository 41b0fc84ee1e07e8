//! Structured-text (JSON) automaton files.
//!
//! ```json
//! { "states": [0, 1], "initial": [0], "marked": [1], "inputs": [0],
//!   "symbols": [["18", "19"]],
//!   "transitions": [[0, 0, 1]],
//!   "outputs": [{"state": 0, "label": "a"}, {"state": 1, "label": ["1.5"]}] }
//! ```

use serde::{Deserialize, Serialize};

use super::{AutomataError, OutputLabel, Recognizer, StateId, SymbolId, SymbolTable, Transition, TransitionSystem};
use crate::decimal::Dec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub state: StateId,
    pub label: OutputLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AutomatonFile {
    pub states: Vec<StateId>,
    pub initial: Vec<StateId>,
    pub marked: Vec<StateId>,
    pub inputs: Vec<SymbolId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub symbols: Option<Vec<Vec<Dec>>>,
    pub transitions: Vec<[usize; 3]>,
    pub outputs: Vec<OutputEntry>,
}

impl AutomatonFile {
    pub fn from_system(ts: &TransitionSystem, symbols: Option<&SymbolTable>) -> AutomatonFile {
        AutomatonFile {
            states: ts.states().iter().copied().collect(),
            initial: ts.initial().iter().copied().collect(),
            marked: ts.marked().iter().copied().collect(),
            inputs: ts.inputs().iter().copied().collect(),
            symbols: symbols.map(|s| s.points().to_vec()),
            transitions: ts.transitions().iter().map(|t| [t.src, t.input, t.dst]).collect(),
            outputs: ts.outputs().iter().map(|(s, l)| OutputEntry { state: *s, label: l.clone() }).collect(),
        }
    }

    pub fn to_system(&self) -> Result<TransitionSystem, AutomataError> {
        TransitionSystem::new(
            self.states.iter().copied(),
            self.initial.iter().copied(),
            self.marked.iter().copied(),
            self.inputs.iter().copied(),
            self.transitions.iter().map(|t| Transition::new(t[0], t[1], t[2])),
            self.outputs.iter().map(|e| (e.state, e.label.clone())).collect(),
        )
    }

    pub fn to_recognizer(&self) -> Result<Recognizer, AutomataError> {
        let points = self.symbols.clone().ok_or_else(|| AutomataError::Format("missing `symbols` table".into()))?;
        let symbols = SymbolTable::from_ordered(points)?;
        let system = self.to_system()?;
        if let Some(bad) = system.inputs().iter().find(|i| **i >= symbols.len()) {
            return Err(AutomataError::UnknownSymbol(*bad));
        }
        Ok(Recognizer { system, symbols })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("automaton file serializes")
    }

    pub fn from_json(text: &str) -> Result<AutomatonFile, AutomataError> {
        serde_json::from_str(text).map_err(|e| AutomataError::Format(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let symbols = SymbolTable::from_points([vec!["18.25".parse().unwrap()], vec!["19".parse().unwrap()]]);
        let ts = TransitionSystem::new(
            [0, 3],
            [0],
            [3],
            [0, 1],
            [Transition::new(0, 1, 3), Transition::new(3, 0, 3)],
            [(0, OutputLabel::Tag("a".into())), (3, OutputLabel::Point(vec!["18.25".parse().unwrap()]))]
                .into_iter()
                .collect(),
        )
        .unwrap();
        let file = AutomatonFile::from_system(&ts, Some(&symbols));
        let back = AutomatonFile::from_json(&file.to_json()).unwrap();
        assert_eq!(back, file);
        let rec = back.to_recognizer().unwrap();
        assert_eq!(rec.system, ts);
        assert_eq!(rec.symbols, symbols);
    }

    #[test]
    fn rejects_bad_reference() {
        let text = r#"{"states":[0],"initial":[1],"marked":[],"inputs":[],"transitions":[],"outputs":[{"state":0,"label":"x"}]}"#;
        let file = AutomatonFile::from_json(text).unwrap();
        assert_eq!(file.to_system().unwrap_err(), AutomataError::UnknownState(1));
    }
}
