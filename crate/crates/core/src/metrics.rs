//! Region geometry and Polsby-Popper compactness.

use std::collections::{BTreeSet, VecDeque};
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{CellId, HostGrid};
use crate::setsystem::{SetKind, SetSystem};
use crate::solver::{Embedding, SolveReport};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MetricsError {
    #[error("region is empty")]
    EmptyRegion,
    #[error("cell {0} is not part of the grid")]
    UnknownCell(CellId),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionGeometry {
    pub set_name: String,
    pub cells: BTreeSet<CellId>,
    pub area: f64,
    pub perimeter: f64,
    pub component_count: usize,
}

fn check_cells(grid: &HostGrid, cells: &BTreeSet<CellId>) -> Result<(), MetricsError> {
    if cells.is_empty() {
        return Err(MetricsError::EmptyRegion);
    }
    match cells.iter().find(|c| !grid.contains(**c)) {
        Some(c) => Err(MetricsError::UnknownCell(*c)),
        None => Ok(()),
    }
}

/// Connected components of the subgraph induced by `cells`, ordered by
/// their smallest cell.
pub fn connected_components(grid: &HostGrid, cells: &BTreeSet<CellId>) -> Vec<BTreeSet<CellId>> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    for &start in cells {
        if !seen.insert(start) {
            continue;
        }
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        while let Some(c) = queue.pop_front() {
            for n in grid.neighbors(c) {
                if cells.contains(&n) && seen.insert(n) {
                    comp.insert(n);
                    queue.push_back(n);
                }
            }
        }
        out.push(comp);
    }
    out
}

fn components(grid: &HostGrid, cells: &BTreeSet<CellId>) -> usize {
    connected_components(grid, cells).len()
}

/// Area, perimeter and component count of a cell set. Hole boundaries count
/// toward the perimeter.
pub fn region_geometry(grid: &HostGrid, cells: &BTreeSet<CellId>) -> Result<RegionGeometry, MetricsError> {
    check_cells(grid, cells)?;
    let m = grid.metrics();
    let internal: usize = cells
        .iter()
        .map(|&c| grid.neighbors(c).filter(|n| *n > c && cells.contains(n)).count())
        .sum();
    Ok(RegionGeometry {
        set_name: String::new(),
        cells: cells.clone(),
        area: cells.len() as f64 * m.cell_area,
        perimeter: cells.len() as f64 * m.cell_perimeter - 2.0 * internal as f64,
        component_count: components(grid, cells),
    })
}

/// Geometry of a named set's region under `emb`.
pub fn set_geometry(
    emb: &Embedding,
    sys: &SetSystem,
    grid: &HostGrid,
    set: &str,
) -> Result<RegionGeometry, MetricsError> {
    let mut g = region_geometry(grid, &emb.region(sys, set))?;
    g.set_name = set.to_string();
    Ok(g)
}

pub fn polsby_popper(geom: &RegionGeometry) -> f64 {
    4.0 * PI * geom.area / (geom.perimeter * geom.perimeter)
}

pub fn is_contiguous(grid: &HostGrid, cells: &BTreeSet<CellId>) -> Result<bool, MetricsError> {
    check_cells(grid, cells)?;
    Ok(components(grid, cells) == 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpScores {
    /// Union of all occupied cells.
    pub pp_c1: f64,
    /// Mean over all sets.
    pub pp_c2: f64,
    /// Mean over base sets.
    pub pp_c3: f64,
}

fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        f64::NAN
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

pub fn pp_scores(emb: &Embedding, sys: &SetSystem, grid: &HostGrid) -> Result<PpScores, MetricsError> {
    let union = region_geometry(grid, &emb.occupied())?;
    let mut all = Vec::new();
    let mut base = Vec::new();
    for s in sys.sets() {
        let pp = polsby_popper(&set_geometry(emb, sys, grid, &s.name)?);
        all.push(pp);
        if s.kind == SetKind::Base {
            base.push(pp);
        }
    }
    Ok(PpScores { pp_c1: polsby_popper(&union), pp_c2: mean(&all), pp_c3: mean(&base) })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SetMetrics {
    pub name: String,
    pub kind: SetKind,
    pub cells: usize,
    pub area: f64,
    pub perimeter: f64,
    pub pp: f64,
    pub components: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub sets: Vec<SetMetrics>,
    pub pp_c1: f64,
    pub pp_c2: f64,
    pub pp_c3: f64,
    /// Per-iteration solver wall times, if a solve report was supplied.
    pub wall_times_s: Vec<f64>,
    pub total_wall_time_s: Option<f64>,
}

pub fn metrics_report(
    emb: &Embedding,
    sys: &SetSystem,
    grid: &HostGrid,
    report: Option<&SolveReport>,
) -> Result<MetricsReport, MetricsError> {
    let scores = pp_scores(emb, sys, grid)?;
    let sets = sys
        .sets()
        .iter()
        .map(|s| {
            let g = set_geometry(emb, sys, grid, &s.name)?;
            Ok(SetMetrics {
                name: s.name.clone(),
                kind: s.kind,
                cells: g.cells.len(),
                area: g.area,
                perimeter: g.perimeter,
                pp: polsby_popper(&g),
                components: g.component_count,
            })
        })
        .collect::<Result<_, MetricsError>>()?;
    Ok(MetricsReport {
        sets,
        pp_c1: scores.pp_c1,
        pp_c2: scores.pp_c2,
        pp_c3: scores.pp_c3,
        wall_times_s: report.map(|r| r.iterations.iter().map(|i| i.wall_time_s).collect()).unwrap_or_default(),
        total_wall_time_s: report.map(|r| r.total_wall_time_s),
    })
}

impl MetricsReport {
    /// One row per set followed by the aggregate rows `PP_C1`, `PP_C2`,
    /// `PP_C3` and, when known, `wall_time`.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["name", "kind", "cells", "area", "perimeter", "pp", "components"]).unwrap();
        for s in &self.sets {
            let kind = match s.kind {
                SetKind::Base => "base",
                SetKind::Overlay => "overlay",
            };
            w.write_record([
                s.name.clone(),
                kind.to_string(),
                s.cells.to_string(),
                s.area.to_string(),
                s.perimeter.to_string(),
                s.pp.to_string(),
                s.components.to_string(),
            ])
            .unwrap();
        }
        for (name, v) in [("PP_C1", self.pp_c1), ("PP_C2", self.pp_c2), ("PP_C3", self.pp_c3)] {
            w.write_record([name, "aggregate", "", "", "", &v.to_string(), ""]).unwrap();
        }
        if let Some(t) = self.total_wall_time_s {
            w.write_record(["wall_time", "aggregate", "", "", "", &t.to_string(), ""]).unwrap();
        }
        String::from_utf8(w.into_inner().unwrap()).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, GridKind};

    fn ids(v: &[u32]) -> BTreeSet<CellId> {
        v.iter().map(|&c| CellId(c)).collect()
    }

    #[test]
    fn single_cells() {
        let sq = build_grid(GridKind::Square, 3, 3).unwrap();
        let g = region_geometry(&sq, &ids(&[4])).unwrap();
        assert_eq!((g.area, g.perimeter, g.component_count), (1.0, 4.0, 1));
        assert!((polsby_popper(&g) - PI / 4.0).abs() < 1e-12);

        let hx = build_grid(GridKind::Hex, 3, 3).unwrap();
        let g = region_geometry(&hx, &ids(&[4])).unwrap();
        assert!((g.area - 1.5 * 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(g.perimeter, 6.0);
        assert!((polsby_popper(&g) - PI * 3f64.sqrt() / 6.0).abs() < 1e-12);
    }

    #[test]
    fn blocks_and_holes() {
        let sq = build_grid(GridKind::Square, 3, 3).unwrap();
        let g = region_geometry(&sq, &ids(&[0, 1, 3, 4])).unwrap();
        assert_eq!((g.area, g.perimeter), (4.0, 8.0));
        // Ring around the center: outer 12 plus hole 4.
        let g = region_geometry(&sq, &ids(&[0, 1, 2, 3, 5, 6, 7, 8])).unwrap();
        assert_eq!(g.perimeter, 16.0);
        assert_eq!(g.component_count, 1);
        let g = region_geometry(&sq, &ids(&[0, 8])).unwrap();
        assert_eq!((g.perimeter, g.component_count), (8.0, 2));
    }

    #[test]
    fn contiguity() {
        let sq = build_grid(GridKind::Square, 3, 3).unwrap();
        assert!(is_contiguous(&sq, &ids(&[4])).unwrap());
        assert!(!is_contiguous(&sq, &ids(&[0, 4])).unwrap());
        assert!(is_contiguous(&sq, &ids(&[0, 1, 2, 5, 8])).unwrap());
        assert_eq!(is_contiguous(&sq, &ids(&[])), Err(MetricsError::EmptyRegion));
        assert_eq!(region_geometry(&sq, &ids(&[99])), Err(MetricsError::UnknownCell(CellId(99))));
    }
}
