//! Program and problem file schemas.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gtc::{GroundStateProblem, GtcOptions};
use crate::linalg::{ComplexMatrix, StateVector};
use crate::simulator::{LcuProgram, RegisterLayout};

/// `{ "m", "p", "n", "weights", "operators", "times", "order", "initial_state" }`.
/// Operators are the raw contractions; dilations are built on load.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProgramFile {
    pub m: usize,
    pub p: usize,
    pub n: usize,
    pub weights: Vec<f64>,
    #[serde(with = "crate::json::matrices")]
    pub operators: Vec<ComplexMatrix>,
    /// Defaults to unit times.
    #[serde(default)]
    pub times: Option<Vec<f64>>,
    /// Defaults to `0..M`.
    #[serde(default)]
    pub order: Option<Vec<usize>>,
    #[serde(with = "crate::json::vector")]
    pub initial_state: StateVector,
}

impl ProgramFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn build(&self, tolerance: f64) -> Result<(LcuProgram, StateVector)> {
        let count = self.operators.len();
        let times = self.times.clone().unwrap_or_else(|| vec![1.0; count]);
        let program = LcuProgram::new(
            RegisterLayout::new(self.m, self.p, self.n),
            self.weights.clone(),
            self.operators.clone(),
            times,
            tolerance,
        )?;
        let program = match &self.order {
            Some(order) => program.with_order(order.clone())?,
            None => program,
        };
        Ok((program, self.initial_state.clone()))
    }
}

/// `{ "hamiltonian", "E", "trial_state"?, "epsilon", "m0_override"?,
/// "M_override"?, "gap"?, "phi0"? }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(with = "crate::json::matrix")]
    pub hamiltonian: ComplexMatrix,
    #[serde(rename = "E")]
    pub e_bound: f64,
    #[serde(default, with = "crate::json::opt_vector")]
    pub trial_state: Option<StateVector>,
    pub epsilon: f64,
    #[serde(default)]
    pub m0_override: Option<usize>,
    #[serde(default, rename = "M_override")]
    pub terms_override: Option<usize>,
    /// Known spectral gap; taken from the eigensolver when absent.
    #[serde(default)]
    pub gap: Option<f64>,
    /// Known ground-state overlap; taken from the eigensolver when absent.
    #[serde(default)]
    pub phi0: Option<f64>,
}

impl ProblemFile {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&read(path)?)
    }

    pub fn build(&self, tolerance: f64) -> Result<(GroundStateProblem, GtcOptions)> {
        let problem = GroundStateProblem::with_tolerance(
            self.hamiltonian.clone(),
            self.e_bound,
            self.trial_state.clone(),
            self.epsilon,
            tolerance,
        )?;
        let options = GtcOptions {
            m0_override: self.m0_override,
            terms_override: self.terms_override,
            gap_override: self.gap,
            phi0_override: self.phi0,
            constants: None,
        };
        Ok((problem, options))
    }
}

pub fn load_matrix(path: &Path) -> Result<ComplexMatrix> {
    crate::json::matrix_from_str(&read(path)?)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn program_defaults() {
        let text = r#"{
            "m": 1, "p": 1, "n": 1,
            "weights": [0.5, 0.5],
            "operators": [[[0.5, 0], [0, 0.5]], [[0.5, 0], [0, 0.5]]],
            "initial_state": [[0.6, 0], [0, 0.8]]
        }"#;
        let f = ProgramFile::from_json(text).unwrap();
        let (prog, psi) = f.build(1e-9).unwrap();
        assert_eq!(prog.times, vec![1.0, 1.0]);
        assert_eq!(prog.order, vec![0, 1]);
        assert_eq!(psi.len(), 2);
    }

    #[test]
    fn program_rejects_unknown_fields() {
        let text = r#"{"m": 0, "p": 0, "n": 1, "weights": [1], "operators": [[[1,0],[0,1]]],
                       "initial_state": [1, 0], "bogus": 1}"#;
        assert!(matches!(ProgramFile::from_json(text), Err(Error::Parse(_))));
    }

    #[test]
    fn problem_fields() {
        let text = r#"{"hamiltonian": [[0, 0], [0, 1]], "E": 0, "epsilon": 0.01,
                       "trial_state": [0.7071067811865476, 0.7071067811865476],
                       "m0_override": 1, "M_override": 2}"#;
        let f = ProblemFile::from_json(text).unwrap();
        assert_eq!(f.terms_override, Some(2));
        let (problem, options) = f.build(1e-9).unwrap();
        assert_eq!(options.m0_override, Some(1));
        assert!((problem.phi0 - 0.5f64.sqrt()).abs() < 1e-12);
    }
}
