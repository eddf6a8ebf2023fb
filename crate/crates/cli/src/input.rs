use std::path::Path;

use anyhow::{anyhow, Context};
use fqco::operators::{build_cost_hamiltonian, gamma_upper_bound_choice};
use fqco::problem::ProblemFile;
use fqco::statevector::DEFAULT_QUBIT_CAP;
use fqco::QcboProblem;

use crate::{CliResult, Failure};

pub const QUBIT_CAP_VAR: &str = "FQCO_MEM_CAP_QUBITS";

pub struct LoadedProblem {
    pub original: QcboProblem,
    pub canonical: QcboProblem,
    pub file_gamma: Option<f64>,
}

/// Reads a problem document; JSON errors report line and column.
pub fn load_problem(path: &Path) -> CliResult<LoadedProblem> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))
        .map_err(Failure::input)?;
    let file: ProblemFile = serde_json::from_str(&text).map_err(|e| {
        Failure::input(anyhow!(
            "{}:{}:{}: {}",
            path.display(),
            e.line(),
            e.column(),
            e
        ))
    })?;
    let file_gamma = file.gamma;
    let original = file
        .into_problem()
        .with_context(|| format!("invalid problem in {}", path.display()))
        .map_err(Failure::input)?;
    let canonical = original
        .canonicalize()
        .with_context(|| format!("cannot canonicalize {}", path.display()))
        .map_err(Failure::input)?;
    Ok(LoadedProblem {
        original,
        canonical,
        file_gamma,
    })
}

impl LoadedProblem {
    /// Penalty shifts for every canonical equality: the explicit values, else
    /// the file's suggestion, else the certified bound.
    pub fn gammas(&self, explicit: Option<&[f64]>) -> CliResult<(Vec<f64>, &'static str)> {
        let count = self.canonical.equalities.len();
        let (values, source) = match explicit {
            Some(v) => (v.to_vec(), "argument"),
            None => match self.file_gamma {
                Some(g) => (vec![g], "problem-file"),
                None => (vec![gamma_upper_bound_choice(&build_cost_hamiltonian(&self.canonical))], "bound"),
            },
        };
        if let Some(g) = values.iter().find(|g| !(g.is_finite() && **g >= 0.0)) {
            return Err(Failure::input(anyhow!("gamma must be finite and non-negative, got {g}")));
        }
        let values = match values.len() {
            _ if count == 0 => Vec::new(),
            1 => vec![values[0]; count],
            len if len == count => values,
            len => {
                return Err(Failure::input(anyhow!(
                    "expected 1 or {count} gamma values, got {len}"
                )))
            }
        };
        Ok((values, source))
    }
}

/// Statevector qubit cap, overridable through the environment.
pub fn qubit_cap() -> CliResult<usize> {
    match std::env::var(QUBIT_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::input(anyhow!("{QUBIT_CAP_VAR} must be a qubit count, got {v:?}"))),
        Err(_) => Ok(DEFAULT_QUBIT_CAP),
    }
}
