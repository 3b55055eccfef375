//! Solver-agnostic mixed integer linear programs and the embedding
//! formulations built on top of them.

mod formulation;
mod lp_format;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use formulation::{
    add_perimeter_objective, build_assignment_model, eccentricity_costs, global_costs, initial_centers,
    CostTable, ModelOptions, ObjectiveKind, VarName, DEFAULT_EPSILON,
};
pub(crate) use formulation::split_set_names;
pub use lp_format::write_lp;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("grid has {cells} cells but {needed} are required")]
    GridTooSmall { cells: usize, needed: usize },
    #[error("set `{0}` has no designated center")]
    CenterMissing(String),
    #[error("no center point given for set `{0}`")]
    MissingCenter(String),
    #[error("unknown set `{0}`")]
    UnknownSet(String),
    #[error("base set `{0}` must always be contiguity constrained")]
    BaseNotContiguous(String),
    #[error("no cost for element `{element}` at cell {cell}")]
    MissingCost { element: String, cell: u32 },
    #[error("invalid bounds for `{0}`")]
    InvalidBounds(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct VarId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VarKind {
    Binary,
    Integer,
    Continuous,
}

impl VarKind {
    pub fn is_integral(self) -> bool {
        !matches!(self, VarKind::Continuous)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparator {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub name: String,
    pub terms: Vec<(VarId, f64)>,
    pub cmp: Comparator,
    pub rhs: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub sense: Sense,
    pub terms: Vec<(VarId, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    variables: Vec<Variable>,
    constraints: Vec<Constraint>,
    objective: Objective,
    var_index: HashMap<String, VarId>,
}

impl Default for MilpModel {
    fn default() -> Self {
        Self::new()
    }
}

impl MilpModel {
    pub fn new() -> Self {
        MilpModel {
            variables: Vec::new(),
            constraints: Vec::new(),
            objective: Objective { sense: Sense::Minimize, terms: Vec::new() },
            var_index: HashMap::new(),
        }
    }

    /// Declares a variable. Names must be unique; a repeated name panics since
    /// it always indicates a formulation bug.
    pub fn add_var(&mut self, name: impl Into<String>, kind: VarKind, lower: f64, upper: f64) -> VarId {
        let name = name.into();
        assert!(lower <= upper, "invalid bounds for {name}");
        let (lower, upper) = match kind {
            VarKind::Binary => (lower.max(0.0), upper.min(1.0)),
            _ => (lower, upper),
        };
        let id = VarId(self.variables.len());
        let prev = self.var_index.insert(name.clone(), id);
        assert!(prev.is_none(), "duplicate variable {name}");
        self.variables.push(Variable { name, kind, lower, upper });
        id
    }

    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: Vec<(VarId, f64)>,
        cmp: Comparator,
        rhs: f64,
    ) {
        debug_assert!(terms.iter().all(|(v, _)| v.0 < self.variables.len()));
        self.constraints.push(Constraint { name: name.into(), terms, cmp, rhs });
    }

    pub fn set_objective(&mut self, sense: Sense, terms: Vec<(VarId, f64)>) {
        self.objective = Objective { sense, terms };
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn var(&self, name: &str) -> Option<VarId> {
        self.var_index.get(name).copied()
    }

    pub fn variable(&self, id: VarId) -> &Variable {
        &self.variables[id.0]
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.terms.iter().map(|(v, c)| c * values[v.0]).sum()
    }

    /// Largest violation of any bound, constraint or integrality requirement.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        let mut worst = 0f64;
        for (v, x) in self.variables.iter().zip(values) {
            worst = worst.max(v.lower - x).max(x - v.upper);
            if v.kind.is_integral() {
                worst = worst.max((x - x.round()).abs());
            }
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|(v, a)| a * values[v.0]).sum();
            let diff = lhs - c.rhs;
            worst = worst.max(match c.cmp {
                Comparator::Le => diff,
                Comparator::Ge => -diff,
                Comparator::Eq => diff.abs(),
            });
        }
        worst
    }

    /// Maps a `name → value` table (as returned by external solvers) onto
    /// variable order; absent names read as zero.
    pub fn values_from_names(&self, named: &HashMap<String, f64>) -> Vec<f64> {
        self.variables.iter().map(|v| named.get(&v.name).copied().unwrap_or(0.0)).collect()
    }

    pub fn to_lp_string(&self) -> String {
        write_lp(self)
    }
}
