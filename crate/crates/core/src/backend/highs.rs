//! HiGHS through its Python bindings.
//!
//! The model is written as an LP file and solved by a short Python driver
//! which reports `{status, objective, bound, gap, values}` as JSON on stdout.

use std::collections::HashMap;
use std::io::Write;
use std::process::Command;

use serde::Deserialize;

use super::{solution_from_named, BackendError, Solution, SolveStatus, SolverBackend, SolverConfig};
use crate::milp::MilpModel;

pub const PYTHON_ENV: &str = "MOSAIC_PYTHON";

const DRIVER: &str = r#"
import json, sys
import highspy

path, gap, time_limit, seed, start = sys.argv[1], float(sys.argv[2]), float(sys.argv[3]), int(sys.argv[4]), sys.argv[5]
h = highspy.Highs()
h.setOptionValue("output_flag", False)
h.setOptionValue("mip_rel_gap", gap)
h.setOptionValue("random_seed", seed)
h.setOptionValue("threads", 1)
if time_limit > 0:
    h.setOptionValue("time_limit", time_limit)
h.readModel(path)
if start:
    with open(start) as f:
        hint = json.load(f)
    sol = highspy.HighsSolution()
    sol.col_value = [hint.get(n, 0.0) for n in h.getLp().col_names_]
    sol.value_valid = True
    h.setSolution(sol)
h.run()
status = h.modelStatusToString(h.getModelStatus())
info = h.getInfo()
out = {"status": status, "objective": None, "bound": None, "gap": None, "values": {}}
if info.primal_solution_status == 2:
    sol = h.getSolution()
    lp = h.getLp()
    out["values"] = dict(zip(lp.col_names_, sol.col_value))
    out["objective"] = info.objective_function_value
    out["bound"] = info.mip_dual_bound
    out["gap"] = info.mip_gap
json.dump(out, sys.stdout)
"#;

#[derive(Debug, Deserialize)]
struct DriverReport {
    status: String,
    objective: Option<f64>,
    bound: Option<f64>,
    gap: Option<f64>,
    values: HashMap<String, f64>,
}

#[derive(Debug, Clone)]
pub struct HighsBackend {
    pub python: String,
}

impl Default for HighsBackend {
    fn default() -> Self {
        HighsBackend { python: std::env::var(PYTHON_ENV).unwrap_or_else(|_| "python3".into()) }
    }
}

impl HighsBackend {
    /// True when the interpreter can import `highspy`.
    pub fn available(&self) -> bool {
        Command::new(&self.python)
            .args(["-c", "import highspy"])
            .output()
            .map(|o| o.status.success())
            .unwrap_or(false)
    }
}

impl SolverBackend for HighsBackend {
    fn name(&self) -> &str {
        "highs"
    }

    fn solve_with_start(
        &mut self,
        model: &MilpModel,
        config: &SolverConfig,
        start: Option<&[f64]>,
    ) -> Result<Solution, BackendError> {
        let io = |e: std::io::Error| BackendError::Solver(e.to_string());
        let mut file = tempfile::Builder::new().suffix(".lp").tempfile().map_err(io)?;
        file.write_all(model.to_lp_string().as_bytes()).map_err(io)?;
        file.flush().map_err(io)?;
        let mut hint_file = tempfile::Builder::new().suffix(".json").tempfile().map_err(io)?;
        let hint_path = match start {
            Some(values) => {
                let named: HashMap<&str, f64> =
                    model.variables().iter().zip(values).map(|(v, x)| (v.name.as_str(), *x)).collect();
                serde_json::to_writer(&mut hint_file, &named).map_err(|e| BackendError::Solver(e.to_string()))?;
                hint_file.flush().map_err(io)?;
                hint_file.path().to_string_lossy().into_owned()
            }
            None => String::new(),
        };

        let time_limit = config.time_limit.map(|d| d.as_secs_f64()).unwrap_or(0.0);
        let output = Command::new(&self.python)
            .arg("-c")
            .arg(DRIVER)
            .arg(file.path())
            .arg(config.relative_gap.to_string())
            .arg(time_limit.to_string())
            .arg(config.seed.min(i32::MAX as u64).to_string())
            .arg(hint_path)
            .output()
            .map_err(|e| BackendError::Solver(format!("cannot run {}: {e}", self.python)))?;
        if !output.status.success() {
            return Err(BackendError::Solver(String::from_utf8_lossy(&output.stderr).trim().to_string()));
        }
        let report: DriverReport = serde_json::from_slice(&output.stdout)
            .map_err(|e| BackendError::Solver(format!("unreadable solver report: {e}")))?;

        let has_point = report.objective.is_some();
        let status = match report.status.as_str() {
            "Optimal" => SolveStatus::Optimal,
            "Infeasible" => return Err(BackendError::Infeasible),
            "Unbounded" | "Primal unbounded" => return Err(BackendError::Unbounded),
            "Time limit reached" if has_point => SolveStatus::TimeLimit,
            "Time limit reached" => return Err(BackendError::NoIncumbent),
            other if has_point => {
                log_unusual(other);
                SolveStatus::TimeLimit
            }
            other => return Err(BackendError::Solver(format!("HiGHS status: {other}"))),
        };
        let objective = report.objective.unwrap_or(f64::NAN);
        let bound = report.bound.unwrap_or(objective);
        let gap = report.gap.unwrap_or(0.0).max(0.0);
        let sol = solution_from_named(model, &report.values, status, bound, gap)?;
        Ok(sol)
    }
}

fn log_unusual(status: &str) {
    eprintln!("highs: stopped with status `{status}`, using incumbent");
}
