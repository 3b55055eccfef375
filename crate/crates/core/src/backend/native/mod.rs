//! LP-based branch and bound.
//!
//! Best-bound search with plunging: after branching the search dives into
//! one child on the warm tableau and parks the sibling in a heap keyed by its
//! parent's bound. Parked nodes only remember their bound changes and are
//! re-solved from the root tableau with the dual simplex.

mod simplex;

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::Instant;

use super::{relative_gap, BackendError, Solution, SolveStatus, SolverBackend, SolverConfig};
use crate::milp::{MilpModel, Sense, VarKind};
use simplex::{LpStatus, Tableau};

const INT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Default)]
pub struct NativeBackend {
    /// Node limit; `None` means unlimited.
    pub max_nodes: Option<u64>,
}

#[derive(Debug, Clone)]
struct OpenNode {
    bound: f64,
    depth: u32,
    changes: Vec<(usize, f64, f64)>,
}

impl PartialEq for OpenNode {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for OpenNode {}
impl PartialOrd for OpenNode {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for OpenNode {
    // Max-heap on the negated bound, deeper nodes first among equals.
    fn cmp(&self, other: &Self) -> Ordering {
        other.bound.total_cmp(&self.bound).then(self.depth.cmp(&other.depth))
    }
}

struct Search<'a> {
    model: &'a MilpModel,
    config: &'a SolverConfig,
    deadline: Option<Instant>,
    integral_objective: bool,
    incumbent: Option<(f64, Vec<f64>)>,
    nodes: u64,
}

impl Search<'_> {
    /// Minimization-form objective of a structural point.
    fn min_objective(&self, values: &[f64]) -> f64 {
        let v = self.model.objective_value(values);
        match self.model.objective().sense {
            Sense::Minimize => v,
            Sense::Maximize => -v,
        }
    }

    fn effective_bound(&self, lp_bound: f64) -> f64 {
        if self.integral_objective {
            (lp_bound - 1e-6).ceil()
        } else {
            lp_bound
        }
    }

    fn prunable(&self, bound: f64) -> bool {
        let Some((inc, _)) = &self.incumbent else { return false };
        let bound = self.effective_bound(bound);
        if bound >= inc - 1e-9 {
            return true;
        }
        self.config.relative_gap > 0.0 && relative_gap(*inc, bound) <= self.config.relative_gap
    }

    /// Most fractional integer column, binaries first.
    fn branching_candidate(&self, t: &Tableau) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64, bool, f64)> = None;
        for (j, v) in self.model.variables().iter().enumerate() {
            if !v.kind.is_integral() {
                continue;
            }
            let x = t.value(j);
            let frac = (x - x.floor()).min(x.ceil() - x);
            if frac <= INT_TOL {
                continue;
            }
            let binary = v.kind == VarKind::Binary;
            let better = match best {
                None => true,
                Some((_, _, bb, bf)) => (binary && !bb) || (binary == bb && frac > bf + 1e-12),
            };
            if better {
                best = Some((j, x, binary, frac));
            }
        }
        best.map(|(j, x, _, _)| (j, x))
    }

    fn accept(&mut self, t: &Tableau) {
        let mut values = t.structural_values();
        for (v, x) in self.model.variables().iter().zip(values.iter_mut()) {
            if v.kind.is_integral() {
                *x = x.round();
            }
        }
        if self.model.max_violation(&values) > 1e-6 {
            return;
        }
        let obj = self.min_objective(&values);
        if self.incumbent.as_ref().is_none_or(|(inc, _)| obj < *inc - 1e-12) {
            self.incumbent = Some((obj, values));
        }
    }

    fn timed_out(&self) -> bool {
        self.deadline.is_some_and(|d| Instant::now() >= d)
    }
}

impl SolverBackend for NativeBackend {
    fn name(&self) -> &str {
        "native"
    }

    fn solve_with_start(
        &mut self,
        model: &MilpModel,
        config: &SolverConfig,
        start: Option<&[f64]>,
    ) -> Result<Solution, BackendError> {
        let deadline = config.time_limit.map(|d| Instant::now() + d);
        let integral_objective = model.objective().terms.iter().all(|(v, c)| {
            model.variable(*v).kind.is_integral() && (c - c.round()).abs() < 1e-12
        });
        let mut search =
            Search { model, config, deadline, integral_objective, incumbent: None, nodes: 0 };
        if let Some(start) = start.filter(|s| s.len() == model.num_vars()) {
            if model.max_violation(start) <= 1e-6 {
                search.incumbent = Some((search.min_objective(start), start.to_vec()));
            }
        }
        let sign = if model.objective().sense == Sense::Maximize { -1.0 } else { 1.0 };

        let mut root = Tableau::from_model(model);
        match root.solve_from_scratch(deadline) {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => return Err(BackendError::Infeasible),
            LpStatus::Unbounded => return Err(BackendError::Unbounded),
            LpStatus::Stopped => {
                let Some((inc, values)) = search.incumbent else { return Err(BackendError::NoIncumbent) };
                return Ok(Solution {
                    status: SolveStatus::TimeLimit,
                    objective: sign * inc,
                    best_bound: sign * f64::NEG_INFINITY,
                    gap: f64::INFINITY,
                    values,
                    nodes: 0,
                });
            }
        }
        let mut heap = BinaryHeap::new();
        // The node currently being plunged: warm tableau plus its path.
        let mut current: Option<(Tableau, Vec<(usize, f64, f64)>)> = Some((root.clone(), Vec::new()));
        let mut stopped = false;

        loop {
            let (mut t, changes) = match current.take() {
                Some(c) => c,
                None => {
                    let Some(node) = heap.pop() else { break };
                    let node: OpenNode = node;
                    if search.prunable(node.bound) {
                        continue;
                    }
                    let mut t = root.clone();
                    for &(j, lo, hi) in &node.changes {
                        t.set_bounds(j, lo, hi);
                    }
                    match t.reoptimize(deadline) {
                        LpStatus::Optimal => {}
                        LpStatus::Stopped => {
                            heap.push(node);
                            stopped = true;
                            break;
                        }
                        _ => continue,
                    }
                    (t, node.changes)
                }
            };
            search.nodes += 1;
            if search.timed_out() || self.max_nodes.is_some_and(|n| search.nodes > n) {
                heap.push(OpenNode { bound: t.objective(), depth: changes.len() as u32, changes });
                stopped = true;
                break;
            }

            let bound = t.objective();
            if search.prunable(bound) {
                continue;
            }
            let Some((j, x)) = search.branching_candidate(&t) else {
                search.accept(&t);
                continue;
            };

            let (lo, hi) = t.bounds(j);
            let down = (j, lo, x.floor());
            let up = (j, x.ceil(), hi);
            let (dive, park) = if x - x.floor() >= 0.5 { (up, down) } else { (down, up) };

            let mut parked = changes.clone();
            parked.push(park);
            heap.push(OpenNode { bound, depth: parked.len() as u32, changes: parked });

            let mut path = changes;
            path.push(dive);
            t.set_bounds(dive.0, dive.1, dive.2);
            match t.reoptimize(deadline) {
                LpStatus::Optimal => current = Some((t, path)),
                LpStatus::Stopped => {
                    heap.push(OpenNode { bound, depth: path.len() as u32, changes: path });
                    stopped = true;
                    break;
                }
                _ => {}
            }

            // Global bound over everything still open.
            if let Some((inc, _)) = &search.incumbent {
                let open_min = heap.peek().map(|n: &OpenNode| n.bound).unwrap_or(f64::INFINITY);
                let cur = current.as_ref().map(|(t, _)| t.objective()).unwrap_or(f64::INFINITY);
                let lower_bound = search.effective_bound(open_min.min(cur)).min(*inc);
                if config.relative_gap > 0.0 && relative_gap(*inc, lower_bound) <= config.relative_gap {
                    break;
                }
            }
        }

        let Some((inc, values)) = search.incumbent.take() else {
            return Err(if stopped { BackendError::NoIncumbent } else { BackendError::Infeasible });
        };
        let open_min = heap
            .iter()
            .map(|n| n.bound)
            .chain(current.as_ref().map(|(t, _)| t.objective()))
            .fold(f64::INFINITY, f64::min);
        let bound = search.effective_bound(open_min).min(inc);
        let gap = relative_gap(inc, bound);
        Ok(Solution {
            status: if stopped { SolveStatus::TimeLimit } else { SolveStatus::Optimal },
            objective: sign * inc,
            best_bound: sign * bound,
            gap,
            values,
            nodes: search.nodes,
        })
    }
}
