//! MILP backends.
//!
//! [`NativeBackend`] is a dense bounded simplex with branch and bound that
//! needs nothing outside this crate; it is exact on small models and the
//! default. [`HighsBackend`] hands the LP file to HiGHS through its Python
//! bindings and is the practical choice for full-size instances. The
//! `MOSAIC_SOLVER` environment variable selects one of them by name.

mod highs;
mod native;

use std::collections::HashMap;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use highs::HighsBackend;
pub use native::NativeBackend;

use crate::milp::MilpModel;

pub const SOLVER_ENV: &str = "MOSAIC_SOLVER";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative optimality gap at which the search stops.
    pub relative_gap: f64,
    pub time_limit: Option<Duration>,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { relative_gap: 0.005, time_limit: None, seed: 0 }
    }
}

impl SolverConfig {
    pub fn exact() -> Self {
        SolverConfig { relative_gap: 0.0, ..Default::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolveStatus {
    /// Proven within the configured gap.
    Optimal,
    /// Stopped at the time limit with an incumbent.
    TimeLimit,
}

/// A feasible point: `values` follow the model's variable order, integer
/// variables are integral within 1e-6.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub status: SolveStatus,
    pub values: Vec<f64>,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub nodes: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BackendError {
    #[error("model is infeasible")]
    Infeasible,
    #[error("time limit reached without a feasible solution")]
    NoIncumbent,
    #[error("model is unbounded")]
    Unbounded,
    #[error("solver error: {0}")]
    Solver(String),
}

pub trait SolverBackend: Send {
    fn name(&self) -> &str;

    /// Solves `model`, using `start` (in variable order) as the first
    /// incumbent when it is feasible.
    fn solve_with_start(
        &mut self,
        model: &MilpModel,
        config: &SolverConfig,
        start: Option<&[f64]>,
    ) -> Result<Solution, BackendError>;

    fn solve(&mut self, model: &MilpModel, config: &SolverConfig) -> Result<Solution, BackendError> {
        self.solve_with_start(model, config, None)
    }
}

/// Relative gap as reported by commercial solvers: `|inc − bound| / |inc|`.
pub fn relative_gap(incumbent: f64, bound: f64) -> f64 {
    let diff = (incumbent - bound).abs();
    if diff <= 1e-9 {
        0.0
    } else if incumbent.abs() < 1e-10 {
        f64::INFINITY
    } else {
        diff / incumbent.abs()
    }
}

/// Selects a backend by name: `native` or `highs`.
pub fn backend_by_name(name: &str) -> Result<Box<dyn SolverBackend>, BackendError> {
    match name.trim().to_ascii_lowercase().as_str() {
        "" | "native" => Ok(Box::new(NativeBackend::default())),
        "highs" => Ok(Box::new(HighsBackend::default())),
        other => Err(BackendError::Solver(format!("unknown backend `{other}` (expected native or highs)"))),
    }
}

/// Backend chosen by `MOSAIC_SOLVER`, defaulting to the native one.
pub fn backend_from_env() -> Result<Box<dyn SolverBackend>, BackendError> {
    backend_by_name(&std::env::var(SOLVER_ENV).unwrap_or_default())
}

/// Turns a `name → value` report into a [`Solution`], checking integrality.
pub(crate) fn solution_from_named(
    model: &MilpModel,
    named: &HashMap<String, f64>,
    status: SolveStatus,
    best_bound: f64,
    gap: f64,
) -> Result<Solution, BackendError> {
    let mut values = model.values_from_names(named);
    for (v, x) in model.variables().iter().zip(values.iter_mut()) {
        if v.kind.is_integral() {
            let r = x.round();
            if (*x - r).abs() > 1e-6 {
                return Err(BackendError::Solver(format!("`{}` = {x} is not integral", v.name)));
            }
            *x = r;
        }
    }
    let objective = model.objective_value(&values);
    Ok(Solution { status, values, objective, best_bound, gap, nodes: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gap_definition() {
        assert_eq!(relative_gap(10.0, 10.0), 0.0);
        assert!((relative_gap(10.0, 9.5) - 0.05).abs() < 1e-12);
        assert!((relative_gap(-4.0, -5.0) - 0.25).abs() < 1e-12);
        assert_eq!(relative_gap(0.0, -1.0), f64::INFINITY);
    }

    #[test]
    fn selection_by_name() {
        assert_eq!(backend_by_name("native").unwrap().name(), "native");
        assert_eq!(backend_by_name("HiGHS").unwrap().name(), "highs");
        assert!(backend_by_name("gurobi").is_err());
    }
}
