//! The embedding integer program.
//!
//! Variables follow a fixed naming scheme that decoders and external solver
//! adapters rely on (see [`VarName`]):
//!
//! * `x_{s}_{v}` binary, representative `s` (index into the contracted
//!   system's elements) occupies cell `v`;
//! * `y_{i}_{u}_{v}` integer, flow of commodity `i` (index into the sets)
//!   along the directed grid edge `u → v`;
//! * `z_{i}_{u}_{v}` binary, edge `{u, v}` (with `u < v`) lies inside set `i`;
//! * `q_{i}_{v}` binary, sink marker of set `i` at cell `v`. Only present when
//!   the set's center representative stands for more than one element.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Comparator, MilpModel, ModelError, Sense, VarId, VarKind};
use crate::grid::{grid_centroid, CellId, HostGrid, Point2};
use crate::setsystem::{ContractedSystem, SetKind};

/// Radius of the initial base-center polygon, in cell edge lengths.
pub const DEFAULT_EPSILON: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VarName {
    Assign { rep: usize, cell: CellId },
    Flow { set: usize, from: CellId, to: CellId },
    Bonus { set: usize, u: CellId, v: CellId },
    Sink { set: usize, cell: CellId },
}

impl fmt::Display for VarName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VarName::Assign { rep, cell } => write!(f, "x_{rep}_{cell}"),
            VarName::Flow { set, from, to } => write!(f, "y_{set}_{from}_{to}"),
            VarName::Bonus { set, u, v } => write!(f, "z_{set}_{u}_{v}"),
            VarName::Sink { set, cell } => write!(f, "q_{set}_{cell}"),
        }
    }
}

impl FromStr for VarName {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        let mut parts = s.split('_');
        let tag = parts.next().ok_or(())?;
        let nums: Vec<u32> = parts.map(|p| p.parse().map_err(|_| ())).collect::<Result<_, _>>()?;
        match (tag, nums.as_slice()) {
            ("x", &[r, c]) => Ok(VarName::Assign { rep: r as usize, cell: CellId(c) }),
            ("y", &[i, u, v]) => Ok(VarName::Flow { set: i as usize, from: CellId(u), to: CellId(v) }),
            ("z", &[i, u, v]) => Ok(VarName::Bonus { set: i as usize, u: CellId(u), v: CellId(v) }),
            ("q", &[i, c]) => Ok(VarName::Sink { set: i as usize, cell: CellId(c) }),
            _ => Err(()),
        }
    }
}

/// Assignment costs `w(s, v)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum CostTable {
    /// Element-independent cost per cell.
    Global(BTreeMap<CellId, f64>),
    /// Cost per (representative id, cell).
    PerElement(BTreeMap<String, BTreeMap<CellId, f64>>),
}

impl CostTable {
    pub fn cost(&self, element: &str, cell: CellId) -> Option<f64> {
        match self {
            CostTable::Global(m) => m.get(&cell).copied(),
            CostTable::PerElement(m) => m.get(element).and_then(|row| row.get(&cell)).copied(),
        }
    }
}

/// Squared distance of every cell center to the grid centroid.
pub fn global_costs(grid: &HostGrid) -> CostTable {
    let mu = grid_centroid(grid);
    CostTable::Global(grid.cells().iter().map(|c| (c.id, c.center.dist2(mu))).collect())
}

/// `w(s, v) = Σ_{S_i ∋ s} |v.p − μ_i|²`.
pub fn eccentricity_costs(
    cs: &ContractedSystem,
    grid: &HostGrid,
    centers: &BTreeMap<String, Point2>,
) -> Result<CostTable, ModelError> {
    let sys = &cs.system;
    let mut set_centers = Vec::with_capacity(sys.sets().len());
    for s in sys.sets() {
        let c = centers.get(&s.name).ok_or_else(|| ModelError::MissingCenter(s.name.clone()))?;
        set_centers.push(*c);
    }
    let sigs = sys.signatures();
    let rows = sys
        .elements()
        .iter()
        .zip(&sigs)
        .map(|(e, sig)| {
            let row = grid
                .cells()
                .iter()
                .map(|cell| (cell.id, sig.iter().map(|&i| cell.center.dist2(set_centers[i])).sum()))
                .collect();
            (e.id.clone(), row)
        })
        .collect();
    Ok(CostTable::PerElement(rows))
}

/// Base set `j` of `k'` starts at `μ + ε (cos 2πj/k', sin 2πj/k')`; every
/// overlay starts at `μ`.
pub fn initial_centers(
    grid: &HostGrid,
    base_set_names: &[String],
    overlay_set_names: &[String],
    epsilon: f64,
) -> BTreeMap<String, Point2> {
    let mu = grid_centroid(grid);
    let k = base_set_names.len() as f64;
    let mut out: BTreeMap<String, Point2> = base_set_names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let a = 2.0 * std::f64::consts::PI * j as f64 / k;
            (name.clone(), Point2::new(mu.x + epsilon * a.cos(), mu.y + epsilon * a.sin()))
        })
        .collect();
    for name in overlay_set_names {
        out.insert(name.clone(), mu);
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ObjectiveKind {
    AssignmentCost,
    PerimeterBonus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelOptions {
    /// Sets that receive flow constraints; must include every base set.
    pub contiguity_sets: Vec<String>,
    pub objective: ObjectiveKind,
}

impl ModelOptions {
    /// Contiguity for every set.
    pub fn full(cs: &ContractedSystem, objective: ObjectiveKind) -> Self {
        ModelOptions { contiguity_sets: cs.system.sets().iter().map(|s| s.name.clone()).collect(), objective }
    }

    /// Contiguity for base sets only.
    pub fn relaxed(cs: &ContractedSystem, objective: ObjectiveKind) -> Self {
        ModelOptions { contiguity_sets: cs.system.base_sets().map(|s| s.name.clone()).collect(), objective }
    }
}

/// Builds the assignment model with flow-based contiguity for
/// `opts.contiguity_sets`.
pub fn build_assignment_model(
    cs: &ContractedSystem,
    grid: &HostGrid,
    costs: &CostTable,
    opts: &ModelOptions,
) -> Result<MilpModel, ModelError> {
    let sys = &cs.system;
    let needed = cs.total_alpha();
    if grid.len() < needed {
        return Err(ModelError::GridTooSmall { cells: grid.len(), needed });
    }
    let contiguous: BTreeSet<&str> = opts.contiguity_sets.iter().map(String::as_str).collect();
    for name in &contiguous {
        if sys.set(name).is_none() {
            return Err(ModelError::UnknownSet(name.to_string()));
        }
    }
    if let Some(b) = sys.base_sets().find(|b| !contiguous.contains(b.name.as_str())) {
        return Err(ModelError::BaseNotContiguous(b.name.clone()));
    }

    let mut m = MilpModel::new();
    let cells = grid.cells();
    let reps = sys.elements();

    // x[s][v] by representative index and grid position.
    let x: Vec<Vec<VarId>> = reps
        .iter()
        .enumerate()
        .map(|(s, _)| {
            cells
                .iter()
                .map(|c| m.add_var(VarName::Assign { rep: s, cell: c.id }.to_string(), VarKind::Binary, 0.0, 1.0))
                .collect()
        })
        .collect();

    for (s, e) in reps.iter().enumerate() {
        let terms = x[s].iter().map(|&v| (v, 1.0)).collect();
        m.add_constraint(format!("inj_{s}"), terms, Comparator::Eq, cs.alpha_of(&e.id) as f64);
    }
    for (p, c) in cells.iter().enumerate() {
        let terms = x.iter().map(|row| (row[p], 1.0)).collect();
        m.add_constraint(format!("occ_{}", c.id), terms, Comparator::Le, 1.0);
    }

    let edges = grid.edges();
    for (i, set) in sys.sets().iter().enumerate() {
        if !contiguous.contains(set.name.as_str()) {
            continue;
        }
        let center = cs.center.get(&set.name).ok_or_else(|| ModelError::CenterMissing(set.name.clone()))?;
        if !set.members.contains(center) {
            return Err(ModelError::CenterMissing(set.name.clone()));
        }
        let center_idx = sys.element_index(center).expect("center is a member");
        let weight = cs.set_weight(set) as f64;
        let members: Vec<usize> = set.members.iter().map(|m| sys.element_index(m).unwrap()).collect();

        // Directed arcs u → v for both orientations of every edge.
        let mut out_arcs: Vec<Vec<VarId>> = vec![Vec::new(); cells.len()];
        let mut in_arcs: Vec<Vec<VarId>> = vec![Vec::new(); cells.len()];
        for &(a, b) in &edges {
            for (u, v) in [(a, b), (b, a)] {
                let name = VarName::Flow { set: i, from: cells[u].id, to: cells[v].id };
                let y = m.add_var(name.to_string(), VarKind::Integer, 0.0, weight - 1.0);
                out_arcs[u].push(y);
                in_arcs[v].push(y);
            }
        }

        // The sink is the cell holding the center; a center standing for
        // several elements gets explicit markers choosing one of its cells.
        let sinks: Vec<VarId> = if cs.alpha_of(center) == 1 {
            x[center_idx].clone()
        } else {
            let q: Vec<VarId> = cells
                .iter()
                .map(|c| m.add_var(VarName::Sink { set: i, cell: c.id }.to_string(), VarKind::Binary, 0.0, 1.0))
                .collect();
            m.add_constraint(format!("sink_{i}"), q.iter().map(|&v| (v, 1.0)).collect(), Comparator::Eq, 1.0);
            for (p, c) in cells.iter().enumerate() {
                m.add_constraint(
                    format!("sinkx_{i}_{}", c.id),
                    vec![(q[p], 1.0), (x[center_idx][p], -1.0)],
                    Comparator::Le,
                    0.0,
                );
            }
            q
        };

        for (p, c) in cells.iter().enumerate() {
            // out − in − Σ_{s∈S_i} x_{s,v} + n_i·sink_v = 0
            let mut terms: Vec<(VarId, f64)> = out_arcs[p].iter().map(|&y| (y, 1.0)).collect();
            terms.extend(in_arcs[p].iter().map(|&y| (y, -1.0)));
            terms.extend(members.iter().map(|&s| (x[s][p], -1.0)));
            terms.push((sinks[p], weight));
            m.add_constraint(format!("flow_{i}_{}", c.id), terms, Comparator::Eq, 0.0);

            // in ≤ (n_i − 1) Σ_{s∈S_i} x_{s,v}
            let mut terms: Vec<(VarId, f64)> = in_arcs[p].iter().map(|&y| (y, 1.0)).collect();
            terms.extend(members.iter().map(|&s| (x[s][p], -(weight - 1.0))));
            m.add_constraint(format!("cap_{i}_{}", c.id), terms, Comparator::Le, 0.0);
        }
    }

    match opts.objective {
        ObjectiveKind::AssignmentCost => {
            let mut terms = Vec::with_capacity(reps.len() * cells.len());
            for (s, e) in reps.iter().enumerate() {
                for (p, c) in cells.iter().enumerate() {
                    let w = costs
                        .cost(&e.id, c.id)
                        .ok_or_else(|| ModelError::MissingCost { element: e.id.clone(), cell: c.id.0 })?;
                    if w != 0.0 {
                        terms.push((x[s][p], w));
                    }
                }
            }
            m.set_objective(Sense::Minimize, terms);
        }
        ObjectiveKind::PerimeterBonus => add_perimeter_objective(&mut m, cs, grid),
    }
    Ok(m)
}

/// Adds `z_{i}_{u}_{v} ≤ Σ_{s∈S_i} x_{s,u}`, the same for `v`, and replaces
/// the objective with `Max Σ z`. Every set receives bonus variables.
pub fn add_perimeter_objective(model: &mut MilpModel, cs: &ContractedSystem, grid: &HostGrid) {
    let sys = &cs.system;
    let cells = grid.cells();
    let mut objective = Vec::new();
    for (i, set) in sys.sets().iter().enumerate() {
        let members: Vec<usize> = set.members.iter().map(|m| sys.element_index(m).unwrap()).collect();
        let occupancy = |model: &MilpModel, p: usize| -> Vec<(VarId, f64)> {
            members
                .iter()
                .map(|&s| {
                    let name = VarName::Assign { rep: s, cell: cells[p].id }.to_string();
                    (model.var(&name).expect("assignment variable declared"), -1.0)
                })
                .collect()
        };
        for (a, b) in grid.edges() {
            let (u, v) = (cells[a].id, cells[b].id);
            let z = model.add_var(VarName::Bonus { set: i, u, v }.to_string(), VarKind::Binary, 0.0, 1.0);
            for (end, cell) in [(a, u), (b, v)] {
                let mut terms = vec![(z, 1.0)];
                terms.extend(occupancy(model, end));
                model.add_constraint(format!("z_{i}_{u}_{v}_{cell}"), terms, Comparator::Le, 0.0);
            }
            objective.push((z, 1.0));
        }
    }
    model.set_objective(Sense::Maximize, objective);
}

/// Names of base and overlay sets in declaration order.
pub(crate) fn split_set_names(cs: &ContractedSystem) -> (Vec<String>, Vec<String>) {
    let pick = |k| cs.system.sets().iter().filter(|s| s.kind == k).map(|s| s.name.clone()).collect();
    (pick(SetKind::Base), pick(SetKind::Overlay))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};
    use crate::setsystem::{contract_indistinguishable, Element, NamedSet, SetSystem};

    fn system(elems: &[&str], sets: &[(&str, SetKind, &[&str])]) -> SetSystem {
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

    fn count(m: &MilpModel, tag: &str) -> usize {
        m.variables().iter().filter(|v| v.name.starts_with(tag)).count()
    }

    #[test]
    fn var_names_round_trip() {
        for n in [
            VarName::Assign { rep: 3, cell: CellId(17) },
            VarName::Flow { set: 1, from: CellId(2), to: CellId(9) },
            VarName::Bonus { set: 0, u: CellId(4), v: CellId(5) },
            VarName::Sink { set: 2, cell: CellId(0) },
        ] {
            assert_eq!(n.to_string().parse::<VarName>(), Ok(n));
        }
        assert!("x_1".parse::<VarName>().is_err());
        assert!("w_1_2".parse::<VarName>().is_err());
    }

    #[test]
    fn global_cost_values() {
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let c = global_costs(&g);
        for id in g.cell_ids() {
            assert!((c.cost("anything", id).unwrap() - 0.5).abs() < 1e-12);
        }
        let g = build_grid(GridKind::Square, 3, 3).unwrap();
        assert_eq!(global_costs(&g).cost("a", CellId(4)), Some(0.0));
    }

    #[test]
    fn eccentricity_sums_over_containing_sets() {
        let s = system(&["a", "b"], &[("A", SetKind::Base, &["a", "b"]), ("B", SetKind::Overlay, &["a"])]);
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Square, 1, 2).unwrap();
        let centers: BTreeMap<String, Point2> =
            [("A".to_string(), Point2::new(1.0, 0.0)), ("B".to_string(), Point2::new(0.0, 2.0))].into();
        let w = eccentricity_costs(&cs, &g, &centers).unwrap();
        assert!((w.cost("a", CellId(0)).unwrap() - 5.0).abs() < 1e-12);
        assert!((w.cost("b", CellId(1)).unwrap() - 0.0).abs() < 1e-12);

        let missing: BTreeMap<String, Point2> = [("A".to_string(), Point2::new(0.0, 0.0))].into();
        assert_eq!(eccentricity_costs(&cs, &g, &missing), Err(ModelError::MissingCenter("B".into())));
    }

    #[test]
    fn eccentricity_with_global_centers_scales_by_membership() {
        let s = system(&["a", "b"], &[("A", SetKind::Base, &["a", "b"]), ("B", SetKind::Overlay, &["a"])]);
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Hex, 3, 3).unwrap();
        let mu = grid_centroid(&g);
        let centers = [("A".to_string(), mu), ("B".to_string(), mu)].into();
        let w = eccentricity_costs(&cs, &g, &centers).unwrap();
        let global = global_costs(&g);
        for id in g.cell_ids() {
            let base = global.cost("", id).unwrap();
            assert!((w.cost("a", id).unwrap() - 2.0 * base).abs() < 1e-12);
            assert!((w.cost("b", id).unwrap() - base).abs() < 1e-12);
        }
    }

    #[test]
    fn initial_center_polygon() {
        let g = build_grid(GridKind::Square, 1, 1).unwrap();
        let names: Vec<String> = ["A", "B", "C", "D"].iter().map(|s| s.to_string()).collect();
        let c = initial_centers(&g, &names, &["P".to_string()], 0.1);
        let expect = [(0.1, 0.0), (0.0, 0.1), (-0.1, 0.0), (0.0, -0.1)];
        for (n, (x, y)) in names.iter().zip(expect) {
            assert!(c[n].dist(Point2::new(x, y)) < 1e-15, "{n}");
        }
        assert_eq!(c["P"], Point2::new(0.0, 0.0));

        let c = initial_centers(&g, &names[..1], &[], 0.01);
        assert!(c["A"].dist(Point2::new(0.01, 0.0)) < 1e-15);
    }

    #[test]
    fn counts_for_three_elements_on_square_2x2() {
        let s = system(&["a", "b", "c"], &[("S", SetKind::Base, &["a", "b", "c"])]);
        // Identity contraction keeps three representatives.
        let cs = ContractedSystem::identity(&s);
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let m = build_assignment_model(&cs, &g, &global_costs(&g), &ModelOptions::full(&cs, ObjectiveKind::AssignmentCost))
            .unwrap();
        assert_eq!(count(&m, "x_"), 12);
        assert_eq!(count(&m, "y_"), 8);
        let cons = |p: &str| m.constraints().iter().filter(|c| c.name.starts_with(p)).count();
        assert_eq!(cons("inj_") + cons("occ_"), 7);
        assert_eq!(cons("flow_") + cons("cap_"), 8);
        assert_eq!(m.num_vars(), 3 * 4 + 2 * g.edge_count());
    }

    #[test]
    fn singleton_flow_bounds_vanish() {
        let s = system(&["a", "b"], &[("A", SetKind::Base, &["a"]), ("B", SetKind::Base, &["b"])]);
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let m = build_assignment_model(&cs, &g, &global_costs(&g), &ModelOptions::full(&cs, ObjectiveKind::AssignmentCost))
            .unwrap();
        assert!(m.variables().iter().filter(|v| v.name.starts_with("y_")).all(|v| v.upper == 0.0));
    }

    #[test]
    fn contracted_injection_uses_alpha() {
        let s = system(&["a", "b"], &[("A", SetKind::Base, &["a", "b"])]);
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let m = build_assignment_model(&cs, &g, &global_costs(&g), &ModelOptions::full(&cs, ObjectiveKind::AssignmentCost))
            .unwrap();
        let inj = m.constraints().iter().find(|c| c.name == "inj_0").unwrap();
        assert_eq!(inj.rhs, 2.0);
        assert_eq!(inj.terms.len(), 4);
        // The center stands for two elements, so sink markers appear.
        assert_eq!(count(&m, "q_"), 4);
    }

    #[test]
    fn rejects_small_grid_and_uncovered_base() {
        let s = system(&["a", "b", "c"], &[("A", SetKind::Base, &["a", "b", "c"])]);
        let cs = contract_indistinguishable(&s);
        let g = build_grid(GridKind::Square, 1, 2).unwrap();
        let opts = ModelOptions::full(&cs, ObjectiveKind::AssignmentCost);
        assert_eq!(
            build_assignment_model(&cs, &g, &global_costs(&g), &opts),
            Err(ModelError::GridTooSmall { cells: 2, needed: 3 })
        );
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let opts = ModelOptions { contiguity_sets: vec![], objective: ObjectiveKind::AssignmentCost };
        assert_eq!(
            build_assignment_model(&cs, &g, &global_costs(&g), &opts),
            Err(ModelError::BaseNotContiguous("A".into()))
        );
    }

    #[test]
    fn perimeter_counts() {
        let s = system(&["a", "b", "c"], &[("A", SetKind::Base, &["a", "b", "c"])]);
        let cs = ContractedSystem::identity(&s);
        let g = build_grid(GridKind::Square, 2, 2).unwrap();
        let mut m = MilpModel::new();
        for (s, _) in cs.system.elements().iter().enumerate() {
            for c in g.cell_ids() {
                m.add_var(VarName::Assign { rep: s, cell: c }.to_string(), VarKind::Binary, 0.0, 1.0);
            }
        }
        add_perimeter_objective(&mut m, &cs, &g);
        assert_eq!(count(&m, "z_"), 4);
        assert_eq!(m.num_constraints(), 8);
        assert_eq!(m.objective().sense, Sense::Maximize);
    }
}
