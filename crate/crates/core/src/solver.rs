//! Embedding pipelines on top of a [`SolverBackend`].
//!
//! * MSP: one solve maximizing interior edges of every region.
//! * MSE: eccentricity costs, re-centered on the previous regions'
//!   centroids for up to `max_iterations` cold solves.
//! * MSEA: as MSE, but from the second iteration on the host grid is
//!   restricted to the cells occupied after the first.
//! * Relaxed: as MSE with contiguity enforced for base sets only.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{BackendError, SolveStatus, SolverBackend, SolverConfig};
use crate::grid::{centroid_of, CellId, GridKind, HostGrid, Point2};
use crate::milp::{
    build_assignment_model, eccentricity_costs, global_costs, initial_centers, CostTable, MilpModel, ModelError,
    ModelOptions, ObjectiveKind, VarName, DEFAULT_EPSILON,
};
use crate::milp::split_set_names;
use crate::setsystem::{expand_embedding, ContractedSystem, SetSystem};

/// Centers closer than this to their predecessors count as converged.
pub const CONVERGENCE_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("no embedding satisfies the contiguity constraints")]
    Infeasible,
    #[error("time limit reached without a feasible embedding")]
    NoIncumbent,
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("variable `{0}` has a non-integral value")]
    NonIntegralSolution(String),
    #[error("solution violates the injection: {0}")]
    OccupancyViolation(String),
    #[error("instance too large for exhaustive search ({elements} elements, {cells} cells)")]
    TooLarge { elements: usize, cells: usize },
}

impl From<BackendError> for SolveError {
    fn from(e: BackendError) -> Self {
        match e {
            BackendError::Infeasible => SolveError::Infeasible,
            BackendError::NoIncumbent => SolveError::NoIncumbent,
            other => SolveError::Backend(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Flow {
    pub from: CellId,
    pub to: CellId,
    pub amount: u32,
}

/// Element → cell injection plus the positive flow arcs of every
/// contiguity-constrained set.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Embedding {
    pub assignment: BTreeMap<String, CellId>,
    pub flows: BTreeMap<String, Vec<Flow>>,
}

impl Embedding {
    pub fn occupied(&self) -> BTreeSet<CellId> {
        self.assignment.values().copied().collect()
    }

    /// Cells covered by the members of `set`.
    pub fn region(&self, sys: &SetSystem, set: &str) -> BTreeSet<CellId> {
        sys.set(set)
            .map(|s| s.members.iter().filter_map(|m| self.assignment.get(m)).copied().collect())
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Msp,
    Mse,
    Msea,
    Relaxed,
}

impl std::str::FromStr for Variant {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "msp" => Ok(Variant::Msp),
            "mse" => Ok(Variant::Mse),
            "msea" => Ok(Variant::Msea),
            "relaxed" => Ok(Variant::Relaxed),
            other => Err(format!("unknown variant `{other}`")),
        }
    }
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Variant::Msp => "msp",
            Variant::Mse => "mse",
            Variant::Msea => "msea",
            Variant::Relaxed => "relaxed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Region centers the costs were computed from; empty for MSP.
    pub centers: BTreeMap<String, Point2>,
    pub objective: f64,
    pub best_bound: f64,
    pub gap: f64,
    pub timed_out: bool,
    pub wall_time_s: f64,
    pub host_cells: usize,
    /// Cells occupied by this iteration's embedding.
    pub occupied: BTreeSet<CellId>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub variant: Variant,
    pub backend: String,
    pub seed: u64,
    pub grid_kind: GridKind,
    pub rows: u32,
    pub cols: u32,
    pub iterations: Vec<IterationRecord>,
    pub total_wall_time_s: f64,
    pub final_objective: f64,
    pub final_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineOptions {
    pub max_iterations: usize,
    pub epsilon: f64,
    pub solver: SolverConfig,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        PipelineOptions { max_iterations: 5, epsilon: DEFAULT_EPSILON, solver: SolverConfig::default() }
    }
}

/// Reads assignments and flows back from a solution vector of a model built
/// by [`build_assignment_model`].
pub fn decode(
    model: &MilpModel,
    values: &[f64],
    cs: &ContractedSystem,
    grid: &HostGrid,
) -> Result<Embedding, SolveError> {
    let sys = &cs.system;
    let mut cells_of: BTreeMap<String, Vec<CellId>> = BTreeMap::new();
    let mut flows: BTreeMap<String, Vec<Flow>> = BTreeMap::new();
    let mut taken: BTreeMap<CellId, usize> = BTreeMap::new();
    for (var, &x) in model.variables().iter().zip(values) {
        if var.kind.is_integral() && (x - x.round()).abs() > 1e-6 {
            return Err(SolveError::NonIntegralSolution(var.name.clone()));
        }
        let Ok(name) = var.name.parse::<VarName>() else { continue };
        match name {
            VarName::Assign { rep, cell } => {
                if x > 0.5 {
                    if !grid.contains(cell) {
                        return Err(SolveError::OccupancyViolation(format!("cell {cell} is outside the grid")));
                    }
                    let e = sys.elements().get(rep).ok_or_else(|| {
                        SolveError::OccupancyViolation(format!("unknown representative index {rep}"))
                    })?;
                    if let Some(prev) = taken.insert(cell, rep) {
                        return Err(SolveError::OccupancyViolation(format!(
                            "cell {cell} holds representatives {prev} and {rep}"
                        )));
                    }
                    cells_of.entry(e.id.clone()).or_default().push(cell);
                }
            }
            VarName::Flow { set, from, to } => {
                let s = sys.sets().get(set).ok_or_else(|| {
                    SolveError::OccupancyViolation(format!("unknown set index {set}"))
                })?;
                let list = flows.entry(s.name.clone()).or_default();
                if x > 0.5 {
                    list.push(Flow { from, to, amount: x.round() as u32 });
                }
            }
            VarName::Bonus { .. } | VarName::Sink { .. } => {}
        }
    }
    let assignment =
        expand_embedding(cs, &cells_of).map_err(|e| SolveError::OccupancyViolation(e.to_string()))?;
    Ok(Embedding { assignment, flows })
}

/// Centroid of every set's region.
pub fn region_centroids(emb: &Embedding, sys: &SetSystem, grid: &HostGrid) -> BTreeMap<String, Point2> {
    sys.sets()
        .iter()
        .map(|s| {
            let region = emb.region(sys, &s.name);
            (s.name.clone(), centroid_of(region.iter().filter_map(|&c| grid.center(c))))
        })
        .collect()
}

fn original_system(cs: &ContractedSystem) -> SetSystem {
    // Rebuild the uncontracted set system from the groups.
    let sys = &cs.system;
    let mut elements = Vec::new();
    for rep in sys.elements() {
        for id in &cs.groups[&rep.id] {
            let label = if *id == rep.id { rep.label.clone() } else { id.clone() };
            elements.push(crate::setsystem::Element { id: id.clone(), label });
        }
    }
    let sets = sys
        .sets()
        .iter()
        .map(|s| crate::setsystem::NamedSet {
            name: s.name.clone(),
            members: s.members.iter().flat_map(|m| cs.groups[m].iter().cloned()).collect(),
            kind: s.kind,
        })
        .collect();
    SetSystem::new(elements, sets).expect("groups expand to a valid system")
}

struct SolvedStep {
    embedding: Embedding,
    record: IterationRecord,
}

fn solve_once(
    backend: &mut dyn SolverBackend,
    model: &MilpModel,
    cs: &ContractedSystem,
    grid: &HostGrid,
    config: &SolverConfig,
    iteration: usize,
    centers: BTreeMap<String, Point2>,
    start: Option<&[f64]>,
) -> Result<SolvedStep, SolveError> {
    let started = Instant::now();
    let sol = backend.solve_with_start(model, config, start)?;
    let wall_time_s = started.elapsed().as_secs_f64();
    let embedding = decode(model, &sol.values, cs, grid)?;
    let occupied = embedding.occupied();
    Ok(SolvedStep {
        embedding,
        record: IterationRecord {
            iteration,
            centers,
            objective: sol.objective,
            best_bound: sol.best_bound,
            gap: sol.gap,
            timed_out: sol.status == SolveStatus::TimeLimit,
            wall_time_s,
            host_cells: grid.len(),
            occupied,
        },
    })
}

fn finish(
    variant: Variant,
    backend: &dyn SolverBackend,
    grid: &HostGrid,
    opts: &PipelineOptions,
    iterations: Vec<IterationRecord>,
) -> SolveReport {
    let last = iterations.last().expect("at least one iteration");
    SolveReport {
        variant,
        backend: backend.name().to_string(),
        seed: opts.solver.seed,
        grid_kind: grid.kind(),
        rows: grid.rows(),
        cols: grid.cols(),
        total_wall_time_s: iterations.iter().map(|r| r.wall_time_s).sum(),
        final_objective: last.objective,
        final_gap: last.gap,
        iterations,
    }
}

/// Perimeter objective with every set contiguous. Returns the best incumbent
/// even when the time limit stops the search.
///
/// The search is warm-started from the first eccentricity iteration, whose
/// k'-gon costs make a contiguous embedding quick to find. Its solve time is
/// included in the reported wall time and counts against the time limit.
pub fn run_msp(
    cs: &ContractedSystem,
    grid: &HostGrid,
    backend: &mut dyn SolverBackend,
    opts: &PipelineOptions,
) -> Result<(Embedding, SolveReport), SolveError> {
    let started = Instant::now();
    let (bases, overlays) = split_set_names(cs);
    let seed_costs = eccentricity_costs(cs, grid, &initial_centers(grid, &bases, &overlays, opts.epsilon))?;
    let seed_model =
        build_assignment_model(cs, grid, &seed_costs, &ModelOptions::full(cs, ObjectiveKind::AssignmentCost))?;
    let seed = backend.solve(&seed_model, &opts.solver)?;

    let costs = global_costs(grid);

    let model = build_assignment_model(cs, grid, &costs, &ModelOptions::full(cs, ObjectiveKind::PerimeterBonus))?;
    let start = perimeter_start(&model, &seed_model, &seed.values, cs);
    let mut config = opts.solver.clone();
    if let Some(limit) = config.time_limit {
        config.time_limit = Some(limit.saturating_sub(started.elapsed()));
    }
    let mut step = solve_once(backend, &model, cs, grid, &config, 1, BTreeMap::new(), Some(&start))?;
    step.record.wall_time_s = started.elapsed().as_secs_f64();
    let report = finish(Variant::Msp, backend, grid, opts, vec![step.record]);
    Ok((step.embedding, report))
}

/// Lifts a solution of the assignment model to the perimeter model: shared
/// variables keep their values and every interior-edge bonus is set to one
/// where the set occupies both endpoints.
fn perimeter_start(model: &MilpModel, seed_model: &MilpModel, seed: &[f64], cs: &ContractedSystem) -> Vec<f64> {
    let sys = &cs.system;
    let by_name: BTreeMap<&str, f64> =
        seed_model.variables().iter().zip(seed).map(|(v, x)| (v.name.as_str(), *x)).collect();
    let mut occupied: BTreeSet<(usize, CellId)> = BTreeSet::new();
    for (v, &x) in seed_model.variables().iter().zip(seed) {
        if let (Ok(VarName::Assign { rep, cell }), true) = (v.name.parse::<VarName>(), x > 0.5) {
            let id = &sys.elements()[rep].id;
            for (i, set) in sys.sets().iter().enumerate() {
                if set.members.contains(id) {
                    occupied.insert((i, cell));
                }
            }
        }
    }
    model
        .variables()
        .iter()
        .map(|v| match v.name.parse::<VarName>() {
            Ok(VarName::Bonus { set, u, v }) => {
                (occupied.contains(&(set, u)) && occupied.contains(&(set, v))) as u8 as f64
            }
            _ => by_name.get(v.name.as_str()).copied().unwrap_or(0.0),
        })
        .collect()
}

fn run_iterative(
    variant: Variant,
    cs: &ContractedSystem,
    grid: &HostGrid,
    backend: &mut dyn SolverBackend,
    opts: &PipelineOptions,
) -> Result<(Embedding, SolveReport), SolveError> {
    let model_opts = match variant {
        Variant::Relaxed => ModelOptions::relaxed(cs, ObjectiveKind::AssignmentCost),
        _ => ModelOptions::full(cs, ObjectiveKind::AssignmentCost),
    };
    let (bases, overlays) = split_set_names(cs);
    let original = original_system(cs);
    let mut centers = initial_centers(grid, &bases, &overlays, opts.epsilon);
    let mut host = grid.clone();
    let mut records = Vec::new();
    let mut embedding = Embedding::default();

    for iteration in 1..=opts.max_iterations.max(1) {
        let costs = eccentricity_costs(cs, &host, &centers)?;
        let model = build_assignment_model(cs, &host, &costs, &model_opts)?;
        let step = solve_once(backend, &model, cs, &host, &opts.solver, iteration, centers.clone(), None)?;
        embedding = step.embedding;
        records.push(step.record);

        if variant == Variant::Msea && iteration == 1 {
            host = host.restrict(&embedding.occupied()).expect("occupied cells are grid cells");
        }
        let next = region_centroids(&embedding, &original, grid);
        let moved = next
            .iter()
            .map(|(name, p)| centers.get(name).map_or(f64::INFINITY, |c| c.dist(*p)))
            .fold(0.0, f64::max);
        centers = next;
        if moved < CONVERGENCE_TOL {
            break;
        }
    }
    Ok((embedding, finish(variant, backend, grid, opts, records)))
}

/// Eccentricity objective with iterated centers, all sets contiguous.
pub fn run_mse(
    cs: &ContractedSystem,
    grid: &HostGrid,
    backend: &mut dyn SolverBackend,
    opts: &PipelineOptions,
) -> Result<(Embedding, SolveReport), SolveError> {
    run_iterative(Variant::Mse, cs, grid, backend, opts)
}

/// MSE with the host grid frozen to the first iteration's cells.
pub fn run_msea(
    cs: &ContractedSystem,
    grid: &HostGrid,
    backend: &mut dyn SolverBackend,
    opts: &PipelineOptions,
) -> Result<(Embedding, SolveReport), SolveError> {
    run_iterative(Variant::Msea, cs, grid, backend, opts)
}

/// MSE with contiguity enforced for base sets only.
pub fn run_relaxed(
    cs: &ContractedSystem,
    grid: &HostGrid,
    backend: &mut dyn SolverBackend,
    opts: &PipelineOptions,
) -> Result<(Embedding, SolveReport), SolveError> {
    run_iterative(Variant::Relaxed, cs, grid, backend, opts)
}

pub fn run_variant(
    variant: Variant,
    cs: &ContractedSystem,
    grid: &HostGrid,
    backend: &mut dyn SolverBackend,
    opts: &PipelineOptions,
) -> Result<(Embedding, SolveReport), SolveError> {
    match variant {
        Variant::Msp => run_msp(cs, grid, backend, opts),
        _ => run_iterative(variant, cs, grid, backend, opts),
    }
}

/// Largest instance [`brute_force_embed`] accepts.
pub const BRUTE_FORCE_MAX_ELEMENTS: usize = 8;
pub const BRUTE_FORCE_MAX_CELLS: usize = 9;

/// Exhaustive minimum-cost embedding.
///
/// Representatives are visited in id order and receive increasing cell
/// combinations, so among equal-cost embeddings the lexicographically first
/// one wins. Flows are not computed.
pub fn brute_force_embed(
    cs: &ContractedSystem,
    grid: &HostGrid,
    costs: &CostTable,
    contiguity_sets: &[String],
) -> Result<(Embedding, f64), SolveError> {
    let total = cs.total_alpha();
    if total > BRUTE_FORCE_MAX_ELEMENTS || grid.len() > BRUTE_FORCE_MAX_CELLS {
        return Err(SolveError::TooLarge { elements: total, cells: grid.len() });
    }
    if total > grid.len() {
        return Err(ModelError::GridTooSmall { cells: grid.len(), needed: total }.into());
    }
    let sys = &cs.system;
    let mut reps: Vec<&str> = sys.elements().iter().map(|e| e.id.as_str()).collect();
    reps.sort();
    let n = grid.len();
    // Cells in id order; masks index this order.
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&p| grid.cells()[p].id);
    let adjacency: Vec<u32> = (0..n)
        .map(|p| grid.adjacent(p).iter().fold(0u32, |m, &q| m | (1 << q)))
        .collect();
    let cost: Vec<Vec<f64>> = reps
        .iter()
        .map(|r| {
            (0..n)
                .map(|p| {
                    costs.cost(r, grid.cells()[p].id).ok_or_else(|| ModelError::MissingCost {
                        element: r.to_string(),
                        cell: grid.cells()[p].id.0,
                    })
                })
                .collect::<Result<_, _>>()
        })
        .collect::<Result<_, _>>()?;
    let rep_pos: BTreeMap<&str, usize> = reps.iter().enumerate().map(|(i, r)| (*r, i)).collect();
    let mut set_members: Vec<Vec<usize>> = Vec::new();
    for name in contiguity_sets {
        let set = sys.set(name).ok_or_else(|| ModelError::UnknownSet(name.clone()))?;
        set_members.push(set.members.iter().map(|m| rep_pos[m.as_str()]).collect());
    }
    let alpha: Vec<usize> = reps.iter().map(|r| cs.alpha_of(r)).collect();

    struct Ctx<'a> {
        order: &'a [usize],
        adjacency: &'a [u32],
        cost: &'a [Vec<f64>],
        alpha: &'a [usize],
        set_members: &'a [Vec<usize>],
        masks: Vec<u32>,
        best: Option<(f64, Vec<u32>)>,
    }

    fn connected(mask: u32, adjacency: &[u32]) -> bool {
        if mask == 0 {
            return true;
        }
        let start = mask.trailing_zeros();
        let mut seen = 1u32 << start;
        let mut frontier = seen;
        while frontier != 0 {
            let p = frontier.trailing_zeros();
            frontier &= frontier - 1;
            let next = adjacency[p as usize] & mask & !seen;
            seen |= next;
            frontier |= next;
        }
        seen == mask
    }

    fn place(ctx: &mut Ctx, rep: usize, start: usize, left: usize, used: u32, partial: f64) {
        if ctx.best.as_ref().is_some_and(|(b, _)| partial > *b - 1e-12) {
            return;
        }
        if rep == ctx.alpha.len() {
            for members in ctx.set_members {
                let mask = members.iter().fold(0, |m, &r| m | ctx.masks[r]);
                if !connected(mask, ctx.adjacency) {
                    return;
                }
            }
            ctx.best = Some((partial, ctx.masks.clone()));
            return;
        }
        if left == 0 {
            let next_left = ctx.alpha.get(rep + 1).copied().unwrap_or(0);
            place(ctx, rep + 1, 0, next_left, used, partial);
            return;
        }
        for k in start..ctx.order.len() {
            let p = ctx.order[k];
            if used & (1 << p) != 0 {
                continue;
            }
            ctx.masks[rep] |= 1 << p;
            let c = ctx.cost[rep][p];
            place(ctx, rep, k + 1, left - 1, used | (1 << p), partial + c);
            ctx.masks[rep] &= !(1 << p);
        }
    }

    let mut ctx = Ctx {
        order: &order,
        adjacency: &adjacency,
        cost: &cost,
        alpha: &alpha,
        set_members: &set_members,
        masks: vec![0; reps.len()],
        best: None,
    };
    let first = alpha.first().copied().unwrap_or(0);
    place(&mut ctx, 0, 0, first, 0, 0.0);
    let Some((objective, masks)) = ctx.best else { return Err(SolveError::Infeasible) };

    let cells_of: BTreeMap<String, Vec<CellId>> = reps
        .iter()
        .zip(&masks)
        .map(|(r, &mask)| {
            let cells = (0..n).filter(|p| mask & (1 << p) != 0).map(|p| grid.cells()[p].id).collect();
            (r.to_string(), cells)
        })
        .collect();
    let assignment =
        expand_embedding(cs, &cells_of).map_err(|e| SolveError::OccupancyViolation(e.to_string()))?;
    Ok((Embedding { assignment, flows: BTreeMap::new() }, objective))
}

/// True when `cells` induce a connected subgraph of `grid`.
pub(crate) fn induces_connected(grid: &HostGrid, cells: &BTreeSet<CellId>) -> bool {
    let Some(&start) = cells.iter().next() else { return true };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(c) = queue.pop_front() {
        for n in grid.neighbors(c) {
            if cells.contains(&n) && seen.insert(n) {
                queue.push_back(n);
            }
        }
    }
    seen.len() == cells.len()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingViolation {
    pub set: Option<String>,
    pub message: String,
}

/// Checks injectivity, completeness and contiguity of `contiguity_sets`.
pub fn validate_embedding(
    emb: &Embedding,
    sys: &SetSystem,
    grid: &HostGrid,
    contiguity_sets: &[String],
) -> Vec<EmbeddingViolation> {
    let mut out = Vec::new();
    let mut seen: BTreeMap<CellId, &str> = BTreeMap::new();
    for e in sys.elements() {
        match emb.assignment.get(&e.id) {
            None => out.push(EmbeddingViolation { set: None, message: format!("element `{}` is unassigned", e.id) }),
            Some(c) if !grid.contains(*c) => out.push(EmbeddingViolation {
                set: None,
                message: format!("element `{}` sits on cell {c} outside the grid", e.id),
            }),
            Some(c) => {
                if let Some(other) = seen.insert(*c, &e.id) {
                    out.push(EmbeddingViolation {
                        set: None,
                        message: format!("cell {c} holds both `{other}` and `{}`", e.id),
                    });
                }
            }
        }
    }
    for id in emb.assignment.keys() {
        if sys.element(id).is_none() {
            out.push(EmbeddingViolation { set: None, message: format!("unknown element `{id}`") });
        }
    }
    if !out.is_empty() {
        return out;
    }
    for name in contiguity_sets {
        if sys.set(name).is_none() {
            out.push(EmbeddingViolation { set: Some(name.clone()), message: format!("unknown set `{name}`") });
            continue;
        }
        if !induces_connected(grid, &emb.region(sys, name)) {
            out.push(EmbeddingViolation {
                set: Some(name.clone()),
                message: format!("set `{name}` is not contiguous"),
            });
        }
    }
    out
}

/// Grid dimensions as stored in embedding files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub kind: GridKind,
    pub rows: u32,
    pub cols: u32,
}

impl GridSpec {
    pub fn of(grid: &HostGrid) -> GridSpec {
        GridSpec { kind: grid.kind(), rows: grid.rows(), cols: grid.cols() }
    }

    pub fn build(&self) -> Result<HostGrid, crate::grid::GridError> {
        crate::grid::build_grid(self.kind, self.rows, self.cols)
    }
}

/// Everything needed to score or render an embedding without re-solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingDocument {
    pub system: SetSystem,
    pub grid: GridSpec,
    pub variant: Variant,
    /// Sets whose contiguity the solve enforced.
    pub contiguity_sets: Vec<String>,
    pub embedding: Embedding,
}

impl EmbeddingDocument {
    pub fn new(system: SetSystem, grid: &HostGrid, variant: Variant, embedding: Embedding) -> Self {
        let contiguity_sets = system
            .sets()
            .iter()
            .filter(|s| variant != Variant::Relaxed || s.kind == crate::setsystem::SetKind::Base)
            .map(|s| s.name.clone())
            .collect();
        EmbeddingDocument { system, grid: GridSpec::of(grid), variant, contiguity_sets, embedding }
    }

    pub fn validate(&self) -> Vec<EmbeddingViolation> {
        match self.grid.build() {
            Ok(g) => validate_embedding(&self.embedding, &self.system, &g, &self.contiguity_sets),
            Err(e) => vec![EmbeddingViolation { set: None, message: e.to_string() }],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::NativeBackend;
    use crate::grid::build_grid;
    use crate::setsystem::{contract_indistinguishable, Element, NamedSet, SetKind};

    pub(crate) fn system(elems: &[&str], sets: &[(&str, SetKind, &[&str])]) -> SetSystem {
        SetSystem::new(
            elems.iter().map(|id| Element { id: id.to_string(), label: id.to_string() }).collect(),
            sets.iter()
                .map(|(n, k, m)| NamedSet {
                    name: n.to_string(),
                    members: m.iter().map(|s| s.to_string()).collect(),
                    kind: *k,
                })
                .collect(),
        )
        .unwrap()
    }

    fn exact() -> PipelineOptions {
        PipelineOptions { solver: SolverConfig::exact(), ..Default::default() }
    }

    #[test]
    fn brute_force_path_tie_breaks_lexicographically() {
        let s = system(&["a", "b"], &[("S", SetKind::Base, &["a", "b"])]);
        let cs = ContractedSystem::identity(&s);
        let g = build_grid(GridKind::Square, 1, 3).unwrap();
        let (emb, obj) = brute_force_embed(&cs, &g, &global_costs(&g), &["S".into()]).unwrap();
        assert!((obj - 1.0).abs() < 1e-12);
        assert_eq!(emb.assignment["a"], CellId(0));
        assert_eq!(emb.assignment["b"], CellId(1));
    }

    #[test]
    fn brute_force_single_cell_and_guard() {
        let s = system(&["a"], &[("S", SetKind::Base, &["a"])]);
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Hex, 1, 1).unwrap();
        let (emb, obj) = brute_force_embed(&cs, &g, &global_costs(&g), &["S".into()]).unwrap();
        assert_eq!(obj, 0.0);
        assert_eq!(emb.assignment["a"], CellId(0));

        let g = build_grid(GridKind::Square, 4, 4).unwrap();
        assert!(matches!(
            brute_force_embed(&cs, &g, &global_costs(&g), &[]),
            Err(SolveError::TooLarge { .. })
        ));
    }

    #[test]
    fn decode_rejects_empty_solution() {
        let s = system(&["a", "b", "c"], &[("S", SetKind::Base, &["a", "b", "c"])]);
        let cs = ContractedSystem::identity(&s);
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let m = build_assignment_model(&cs, &g, &global_costs(&g), &ModelOptions::full(&cs, ObjectiveKind::AssignmentCost))
            .unwrap();
        let zeros = vec![0.0; m.num_vars()];
        assert!(matches!(decode(&m, &zeros, &cs, &g), Err(SolveError::OccupancyViolation(_))));
        let mut half = zeros.clone();
        half[0] = 0.5;
        assert!(matches!(decode(&m, &half, &cs, &g), Err(SolveError::NonIntegralSolution(_))));
    }

    #[test]
    fn decode_hand_built_vector() {
        // a→0, b→1, c→2 on a 2×2 square grid with center a (smallest id).
        // Flow: b (cell 1) → a (cell 0), c (cell 2) → a (cell 0).
        let s = system(&["a", "b", "c"], &[("S", SetKind::Base, &["a", "b", "c"])]);
        let cs = ContractedSystem::identity(&s);
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let m = build_assignment_model(&cs, &g, &global_costs(&g), &ModelOptions::full(&cs, ObjectiveKind::AssignmentCost))
            .unwrap();
        let mut x = vec![0.0; m.num_vars()];
        for name in ["x_0_0", "x_1_1", "x_2_2", "y_0_1_0", "y_0_2_0"] {
            x[m.var(name).unwrap().0] = 1.0;
        }
        assert!(m.max_violation(&x) < 1e-12);
        let emb = decode(&m, &x, &cs, &g).unwrap();
        assert_eq!(emb.assignment["a"], CellId(0));
        assert_eq!(emb.assignment["b"], CellId(1));
        assert_eq!(emb.assignment["c"], CellId(2));
        assert_eq!(emb.flows["S"].len(), 2);
    }

    #[test]
    fn singleton_sets_have_empty_flow_lists() {
        let s = system(&["a", "b"], &[("A", SetKind::Base, &["a"]), ("B", SetKind::Base, &["b"])]);
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let (emb, report) = run_mse(&cs, &g, &mut NativeBackend::default(), &exact()).unwrap();
        assert!(emb.flows["A"].is_empty() && emb.flows["B"].is_empty());
        assert!(!report.iterations.is_empty());
    }

    #[test]
    fn msp_small_optima() {
        // Four elements in one set on 3×3: a 2×2 block has four interior edges.
        let s = system(&["a", "b", "c", "d"], &[("S", SetKind::Base, &["a", "b", "c", "d"])]);
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Square, 3, 3).unwrap();
        let (emb, rep) = run_msp(&cs, &g, &mut NativeBackend::default(), &exact()).unwrap();
        assert_eq!(rep.final_objective.round(), 4.0);
        assert_eq!(emb.assignment.len(), 4);

        let s = system(&["a", "b", "c"], &[("S", SetKind::Base, &["a", "b", "c"])]);
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let (_, rep) = run_msp(&cs, &g, &mut NativeBackend::default(), &exact()).unwrap();
        assert_eq!(rep.final_objective.round(), 2.0);
    }

    #[test]
    fn mse_iteration_limits() {
        let s = system(
            &["a", "b", "c", "d", "e"],
            &[("A", SetKind::Base, &["a", "b", "c"]), ("B", SetKind::Base, &["d", "e"]), ("P", SetKind::Overlay, &["c", "d"])],
        );
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Hex, 3, 3).unwrap();
        let opts = PipelineOptions { max_iterations: 1, ..exact() };
        let (_, rep) = run_mse(&cs, &g, &mut NativeBackend::default(), &opts).unwrap();
        assert_eq!(rep.iterations.len(), 1);
        assert_eq!(rep.variant, Variant::Mse);

        let (emb, rep) = run_msea(&cs, &g, &mut NativeBackend::default(), &exact()).unwrap();
        assert!(rep.iterations.len() <= 5);
        for r in &rep.iterations[1..] {
            assert_eq!(r.host_cells, 5);
        }
        assert!(validate_embedding(&emb, &s, &g, &["A".into(), "B".into(), "P".into()]).is_empty());
    }

    #[test]
    fn validation_reports_offending_set() {
        let s = system(&["a", "b"], &[("S", SetKind::Base, &["a", "b"])]);
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let emb = Embedding {
            assignment: [("a".to_string(), CellId(0)), ("b".to_string(), CellId(3))].into(),
            flows: BTreeMap::new(),
        };
        let v = validate_embedding(&emb, &s, &g, &["S".into()]);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].set.as_deref(), Some("S"));
    }
}
